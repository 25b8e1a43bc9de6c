"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

import logging
from typing import Any

import numpy as np

import torch
from fiber_adhesion.beam import stress_outputs
from fiber_adhesion.cli.result_writers import (
    CUTOFF_STUDY_COLUMNS,
    CYLINDER_TABLE_COLUMNS,
    INTEGRATION_STUDY_COLUMNS,
    PATH_COLUMNS,
    POTENTIAL_TABLE_COLUMNS,
    ResultWriter,
    SNAPSHOT_COLUMNS,
    TANGENT_TEST_COLUMNS,
)
from fiber_adhesion.cli.scenario_config import ScenarioConfig, ScenarioName
from fiber_adhesion.fiber_adhesion_types import EquilibriumPath, SectionKinematics
from fiber_adhesion.interaction import (
    cutoff_error_estimate,
    integration_rule_error,
    point_forces,
)
from fiber_adhesion.potential_laws import (
    cylinder_per_length,
    cylinder_per_length_force,
    equilibrium_gap,
    issip_value,
    law_terms,
    lssip_derivatives,
)
from fiber_adhesion.solver import FiberSystem, peel_system, PeelProblem
from fiber_adhesion.verify import (
    loglog_slope_fit,
    oracle_potential,
    perturbed_fiber_pair,
    tangent_column_errors,
)
from scipy import optimize

from torch import Tensor

logger: logging.Logger = logging.getLogger(__name__)

# Reference equilibrium gap of a section resting on a parallel Lennard-Jones cylinder, 0.00017 L for L = 5.
REFERENCE_EQUILIBRIUM_GAP: float = 0.00085

# Largest relative deviation of assembled tangent columns from complex-step columns.
TANGENT_TOLERANCE: float = 1e-6


def _slope_or_none(samples: list[tuple[float, float]]) -> float | None:
    try:
        return loglog_slope_fit(samples)
    except ValueError:
        return None


def potential_table(config: ScenarioConfig, writer: ResultWriter) -> dict[str, Any]:
    """ISSIP, LSSIP and quadrature reference over log-spaced gaps for every configured offset."""
    law, geometry, study = config.law.build(), config.geometry.build(), config.study
    q2 = np.geomspace(study.q2_min, study.q2_max, study.num_q2)
    q2_tensor = torch.from_numpy(q2)
    spec = study.quadrature_spec()
    lssip = lssip_derivatives(q2_tensor, law, geometry).value.numpy()

    blocks, errors = [], {}
    for q1 in study.q1_values:
        issip = issip_value(
            SectionKinematics.from_offset_and_gap(q1, q2_tensor, geometry), law, geometry
        ).numpy()
        if study.oracle:
            oracle = np.array(
                [oracle_potential(q1, gap, law, geometry, spec).value for gap in q2]
            )
            norm = np.linalg.norm(oracle)
            errors[f"{q1:g}"] = {
                "issip": np.linalg.norm(issip - oracle) / norm,
                "lssip": np.linalg.norm(lssip - oracle) / norm,
            }
        else:
            oracle = np.full_like(q2, np.nan)
        blocks.append(np.column_stack([np.full_like(q2, q1), q2, issip, lssip, oracle]))

    slopes = {
        f"{term.m:g}": loglog_slope_fit(
            list(
                zip(
                    q2,
                    issip_value(
                        SectionKinematics.from_offset_and_gap(0.0, q2_tensor, geometry),
                        term,
                        geometry,
                    ).tolist(),
                )
            )
        )
        for term in law_terms(law)
    }
    writer.write_table("potential_table.csv", POTENTIAL_TABLE_COLUMNS, np.concatenate(blocks))
    return {"l2_relative_errors": errors, "zero_offset_slopes": slopes}


def cylinder_equilibrium(config: ScenarioConfig, writer: ResultWriter) -> dict[str, Any]:
    """Equilibrium gap of a section on a parallel infinite cylinder from the closed-form root and a golden-section
    search, with the per-length potential and force around it."""
    law, geometry = config.law.build(), config.geometry.build()
    gap = equilibrium_gap(law, geometry)
    minimized = optimize.minimize_scalar(
        lambda q2: cylinder_per_length(q2, law, geometry).item(),
        bracket=(0.5 * gap, gap * (1 + 1e-3), 2.0 * gap),
        method="golden",
        tol=1e-12,
    ).x
    q2 = np.geomspace(0.25 * gap, 8.0 * gap, 200)
    q2_tensor = torch.from_numpy(q2)
    potential = cylinder_per_length(q2_tensor, law, geometry).numpy()
    force = cylinder_per_length_force(q2_tensor, law, geometry).numpy()

    slopes = {
        f"{term.m:g}": loglog_slope_fit(
            list(zip(q2, cylinder_per_length(q2_tensor, term, geometry).tolist()))
        )
        for term in law_terms(law)
    }
    writer.write_table("cylinder_table.csv", CYLINDER_TABLE_COLUMNS, np.column_stack([q2, potential, force]))
    logger.info(f"Equilibrium gap {gap:.10e} (golden-section search {minimized:.10e}).")
    return {
        "equilibrium_gap": gap,
        "golden_section_gap": minimized,
        "golden_section_relative_difference": abs(minimized - gap) / gap,
        "equilibrium_gap_over_length": gap / config.geometry.length,
        "reference_gap_relative_difference": abs(gap - REFERENCE_EQUILIBRIUM_GAP) / REFERENCE_EQUILIBRIUM_GAP,
        "cylinder_slopes": slopes,
    }


def cutoff_study(config: ScenarioConfig, writer: ResultWriter) -> dict[str, Any]:
    """Relative error of the per-length normal force when pairs beyond each cutoff are neglected."""
    law, geometry, study = config.law.build(), config.geometry.build(), config.study
    errors = [
        cutoff_error_estimate(study.gap, law, geometry, cutoff) for cutoff in study.cutoffs
    ]
    writer.write_table(
        "cutoff_study.csv",
        CUTOFF_STUDY_COLUMNS,
        [(study.gap, cutoff, error) for cutoff, error in zip(study.cutoffs, errors)],
    )
    return {
        "gap": study.gap,
        "relative_errors": {f"{cutoff:g}": error for cutoff, error in zip(study.cutoffs, errors)},
        "configured_cutoff_error": cutoff_error_estimate(
            study.gap, law, geometry, config.discretization.cutoff
        ),
    }


def integration_study(config: ScenarioConfig, writer: ResultWriter) -> dict[str, Any]:
    """Errors of composite Gauss-Legendre rules integrating the gap derivative of the potential along an offset line."""
    law, geometry, study = config.law.build(), config.geometry.build(), config.study
    rows = [
        (
            order,
            points_per_length,
            integration_rule_error(study.gap, study.half_width, points_per_length, order, law, geometry),
        )
        for order in study.orders
        for points_per_length in study.points_per_length
    ]
    writer.write_table(
        "integration_study.csv", INTEGRATION_STUDY_COLUMNS, rows, integer_columns=("order",)
    )
    return {
        "convergence_slopes": {
            str(order): _slope_or_none(
                [(density, error) for rule, density, error in rows if rule == order]
            )
            for order in study.orders
        },
        "midpoint_error_at_density": integration_rule_error(
            study.gap, study.half_width, config.discretization.density, 1, law, geometry
        ),
    }


def tangent_test(config: ScenarioConfig, writer: ResultWriter) -> dict[str, Any]:
    """Assembled tangent of a randomly perturbed fiber pair against complex-step and central-difference columns."""
    if config.interaction.include_moments:
        logger.warning("Interaction moments are not linearized; their columns are expected to differ.")
    assert config.solver.youngs_modulus is not None
    system, displacements = perturbed_fiber_pair(
        length=config.geometry.length,
        degree=config.discretization.degree,
        num_control_points=config.discretization.num_control_points,
        geometry=config.geometry.build(),
        law=config.law.build(),
        youngs_modulus=config.solver.youngs_modulus,
        gap=config.geometry.initial_gap,
        amplitude=config.study.perturbation,
        interaction_config=config.interaction.build(config.discretization),
        seed=config.seed,
    )
    generator = torch.Generator().manual_seed(config.seed)
    dofs = torch.randperm(system.num_dofs, generator=generator)[: config.study.num_columns]
    errors = tangent_column_errors(system, displacements, sorted(dofs.tolist()))
    writer.write_table(
        "tangent_test.csv",
        TANGENT_TEST_COLUMNS,
        [(error.dof, error.max_abs_difference, error.relative_error) for error in errors],
        integer_columns=("dof",),
    )
    max_relative_error = max(error.relative_error for error in errors)
    return {
        "num_columns": len(errors),
        "max_relative_error": max_relative_error,
        "max_difference_error": max(error.difference_error for error in errors),
        "passed": max_relative_error <= TANGENT_TOLERANCE,
    }


def snapshot_rows(system: FiberSystem, displacements: Tensor, with_interaction: bool = True) -> np.ndarray:
    """Per interaction point of both beams: beam index, reference arc length, current position, stress resultant,
    stress couple and interaction force per unit length along the tangent and the normal."""
    grid = system.grid(displacements)
    if with_interaction:
        forces = point_forces(
            grid, system.find_pairs(grid), system.law, system.geometry, system.interaction_config
        )
        tangential, normal = [force.f1 for force in forces], [force.f2 for force in forces]
    else:
        tangential = normal = [torch.zeros_like(layout.xi) for layout in grid.layouts]

    blocks = []
    for index, (layout, frame) in enumerate(zip(grid.layouts, grid.frames)):
        beam = layout.beam
        axial, moment = stress_outputs(beam, beam.local_displacements(displacements), layout.xi)
        blocks.append(
            torch.stack(
                [
                    torch.full_like(layout.xi, index),
                    # Straight fibers are parametrized proportionally to arc length.
                    layout.xi * beam.reference_length,
                    frame.position[:, 0],
                    frame.position[:, 1],
                    axial,
                    moment,
                    tangential[index],
                    normal[index],
                ],
                dim=-1,
            )
        )
    return torch.cat(blocks).numpy()


def _snapshot_indices(path: EquilibriumPath, interval: int) -> list[int]:
    last_converged = max(
        (index for index, record in enumerate(path.records) if not record.post_snap), default=0
    )
    return [
        index
        for index, record in enumerate(path.records)
        if index % interval == 0 or index == last_converged or record.post_snap
    ]


def peel(config: ScenarioConfig, writer: ResultWriter) -> dict[str, Any]:
    """Peeling and pull-off of two fibers; writes the reaction path and per-point snapshots."""
    system, boundary_conditions = peel_system(
        config.peel_setup(),
        config.law.build(),
        config.interaction.build(config.discretization),
    )
    problem = PeelProblem(
        system,
        boundary_conditions,
        config.solver.build(),
        check_equilibrium=config.solver.check_equilibrium,
    )
    path, milestones = problem.run()

    writer.write_table(
        "path.csv",
        PATH_COLUMNS,
        [
            (record.t, record.reaction_x, record.reaction_y, record.iterations, record.post_snap)
            for record in path.records
        ],
        integer_columns=("iterations", "post_snap"),
    )
    resultants = {}
    for index in _snapshot_indices(path, config.solver.snapshot_interval):
        record = path.records[index]
        rows = snapshot_rows(
            system, problem.snapshots[record.snapshot_id], with_interaction=not record.post_snap
        )
        writer.write_table(
            f"snapshots/step_{index:05d}.csv", SNAPSHOT_COLUMNS, rows, integer_columns=("beam",)
        )
        if record.post_snap:
            resultants = {
                "post_snap_max_abs_axial_force": float(np.abs(rows[:, 4]).max()),
                "post_snap_max_abs_moment": float(np.abs(rows[:, 5]).max()),
                "axial_stiffness": system.beams[0].axial_stiffness,
            }

    return {
        "peak_t": milestones.peak_t,
        "peak_reaction": milestones.peak_reaction,
        "pull_off_t": milestones.pull_off_t,
        "num_points": len(path),
        "mean_iterations": path.mean_iterations,
        "equilibrium_mismatch": problem.equilibrium_mismatch,
        **resultants,
    }


def run_scenario(config: ScenarioConfig, writer: ResultWriter) -> dict[str, Any]:
    """Runs the configured scenario, writes its tables and summary.json, and returns the summary."""
    match config.scenario:
        case ScenarioName.POTENTIAL_TABLE:
            results = potential_table(config, writer)
        case ScenarioName.CYLINDER_EQ:
            results = cylinder_equilibrium(config, writer)
        case ScenarioName.CUTOFF_STUDY:
            results = cutoff_study(config, writer)
        case ScenarioName.INTEGRATION_STUDY:
            results = integration_study(config, writer)
        case ScenarioName.TANGENT_TEST:
            results = tangent_test(config, writer)
        case ScenarioName.PEEL:
            results = peel(config, writer)
        case _:
            raise NotImplementedError(f"{config.scenario=} is not supported.")

    summary = {"scenario": config.scenario.value, "seed": config.seed, **results}
    writer.write_summary(summary)
    return summary
