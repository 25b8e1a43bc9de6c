"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

import enum
import json
import re
import types
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field, fields, is_dataclass, MISSING
from pathlib import Path
from typing import Any, get_args, get_origin, get_type_hints

from fiber_adhesion.fiber_adhesion_types import (
    CompositeLaw,
    ContinuationConfig,
    Formulation,
    InteractionConfig,
    InteractionLawType,
    lennard_jones_law,
    PowerLawSpec,
    QuadratureMethod,
    QuadratureSpec,
    SectionPairGeometry,
)
from fiber_adhesion.solver import PeelSetup

_FIELD_IN_MESSAGE = re.compile(r"Invalid (\w+) value")

# Accepted JSON types of scalar fields.
_SCALAR_TYPES: dict[type, type | tuple[type, ...]] = {
    bool: bool,
    int: int,
    float: (int, float),
    str: str,
}


###### ERROR CLASSES ######
class ConfigValidationError(ValueError):
    """Scenario configuration that cannot be parsed or violates a constraint.

    Attributes:
        path (str): Dotted path of the offending field, empty for the document itself.

    """

    def __init__(self, message: str, path: str = "") -> None:
        super().__init__(message)
        self.path = path


###### ENUM CLASSES ######
@enum.unique
class ScenarioName(enum.Enum):
    POTENTIAL_TABLE = "potential-table"
    CYLINDER_EQ = "cylinder-eq"
    CUTOFF_STUDY = "cutoff-study"
    INTEGRATION_STUDY = "integration-study"
    TANGENT_TEST = "tangent-test"
    PEEL = "peel"


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _check_positive(section: object, names: Sequence[str]) -> None:
    for name in names:
        if not getattr(section, name) > 0.0:
            raise ValueError(f"Invalid {name} value: {getattr(section, name)}. Must be > 0.0.")


###### DATACLASSES ######
@dataclass(kw_only=True)
class LawTermSettings:
    m: float
    k_m: float


@dataclass(kw_only=True)
class LawSettings:
    """Point-pair law, Lennard-Jones unless a term list is given.

    Attributes:
        k_6 (float): Attractive coefficient. (Default: -1e-7)
        k_12 (float): Repulsive coefficient. (Default: 5e-25)
        terms (list[LawTermSettings] | None): General inverse power terms; replaces k_6 and k_12. (Default: None)

    """

    k_6: float = -1e-7
    k_12: float = 5e-25
    terms: list[LawTermSettings] | None = None

    def build(self) -> CompositeLaw:
        if self.terms is None:
            return lennard_jones_law(self.k_6, self.k_12)
        return CompositeLaw(
            terms=tuple(PowerLawSpec(m=term.m, k_m=term.k_m) for term in self.terms)
        )


@dataclass(kw_only=True)
class GeometrySettings:
    radius_x: float = 0.02
    radius_y: float = 0.02
    beta_x: float = 1.0
    beta_y: float = 1.0
    length: float = 5.0
    initial_gap: float = 0.0008

    def __post_init__(self) -> None:
        _check_positive(
            self, ("radius_x", "radius_y", "beta_x", "beta_y", "length", "initial_gap")
        )

    def build(self) -> SectionPairGeometry:
        return SectionPairGeometry(
            radius_x=self.radius_x,
            radius_y=self.radius_y,
            beta_x=self.beta_x,
            beta_y=self.beta_y,
        )


@dataclass(kw_only=True)
class DiscretizationSettings:
    degree: int = 4
    num_control_points: int = 161
    density: float = 3200.0
    cutoff: float = 0.05
    end_exclusion_fraction: float = 0.0

    def __post_init__(self) -> None:
        if self.degree < 2:
            raise ValueError(f"Invalid degree value: {self.degree}. Must be >= 2.")
        if self.num_control_points <= self.degree:
            raise ValueError(
                f"Invalid num_control_points value: {self.num_control_points}. Must be > degree = {self.degree}."
            )
        _check_positive(self, ("cutoff",))
        if not self.density >= 1.0:
            raise ValueError(f"Invalid density value: {self.density}. Must be >= 1.0.")
        if not 0.0 <= self.end_exclusion_fraction < 0.5:
            raise ValueError(
                f"Invalid end_exclusion_fraction value: {self.end_exclusion_fraction}. Must be in [0.0, 0.5)."
            )


@dataclass(kw_only=True)
class InteractionSettings:
    law_type: InteractionLawType = InteractionLawType.ISSIP
    formulation: Formulation = Formulation.AVERAGED
    include_moments: bool = False
    include_tangential_force: bool = True
    freeze_pairs_per_step: bool = False
    pair_chunk_size: int = 200000

    def build(self, discretization: DiscretizationSettings) -> InteractionConfig:
        return InteractionConfig(
            law_type=self.law_type,
            formulation=self.formulation,
            include_moments=self.include_moments,
            include_tangential_force=self.include_tangential_force,
            cutoff=discretization.cutoff,
            density=discretization.density,
            end_exclusion_fraction=discretization.end_exclusion_fraction,
            freeze_pairs_per_step=self.freeze_pairs_per_step,
            pair_chunk_size=self.pair_chunk_size,
        )


@dataclass(kw_only=True)
class SolverSettings:
    """Load stepping and Newton settings.

    Attributes:
        youngs_modulus (float | None): Material stiffness; required by the peel and tangent-test scenarios.
            (Default: None)
        check_equilibrium (bool): Compare reactions with a refined interaction force at the first load step.
            (Default: True)
        snapshot_interval (int): Every snapshot_interval-th path point is written; the last converged and the
            post-snap points always are. (Default: 1)

    The remaining fields are those of ContinuationConfig.

    """

    youngs_modulus: float | None = None
    t_start: float = 0.00016
    t_end: float = 1.0
    initial_step: float = 1e-3
    max_step: float = 0.02
    min_step: float = 1e-8
    growth_factor: float = 1.25
    shrink_factor: float = 0.5
    target_iterations: int = 8
    max_iterations: int = 25
    tolerance: float = 1e-5
    force_scale_floor: float = 1e-10
    check_equilibrium: bool = True
    snapshot_interval: int = 1

    def __post_init__(self) -> None:
        if self.youngs_modulus is not None:
            _check_positive(self, ("youngs_modulus",))
        if self.snapshot_interval < 1:
            raise ValueError(
                f"Invalid snapshot_interval value: {self.snapshot_interval}. Must be >= 1."
            )

    def build(self) -> ContinuationConfig:
        return ContinuationConfig(
            **{
                continuation_field.name: getattr(self, continuation_field.name)
                for continuation_field in fields(ContinuationConfig)
            }
        )


@dataclass(kw_only=True)
class StudySettings:
    """Sampling of the potential table and the convergence studies.

    Attributes:
        q1_values (list[float]): Offsets of the potential table. (Default: [0.0, 0.01, 0.02, 0.04])
        q2_min (float): Smallest gap of the potential table. (Default: 0.0006)
        q2_max (float): Largest gap of the potential table. (Default: 0.005)
        num_q2 (int): Log-spaced gaps of the potential table. (Default: 20)
        oracle (bool): Add the quadrature reference to the potential table. (Default: True)
        oracle_method (QuadratureMethod): Coordinates of the quadrature reference. (Default: QuadratureMethod.REDUCED_2D)
        oracle_relative_tolerance (float): Relative tolerance of the quadrature reference. (Default: 1e-10)
        gap (float): Gap of the cutoff and integration studies. (Default: 0.0009)
        cutoffs (list[float]): Cutoffs of the cutoff study. (Default: [0.045, 0.05, 0.06, 0.07])
        half_width (float): Offset range [-half_width, half_width] of the integration study. (Default: 0.03)
        orders (list[int]): Gauss-Legendre orders of the integration study. (Default: [1, 2, 3, 4, 5])
        points_per_length (list[float]): Point densities of the integration study.
            (Default: [400.0, 800.0, 1600.0, 3200.0, 6400.0])
        num_columns (int): Tangent columns compared in the tangent test. (Default: 20)
        perturbation (float): Largest random control point displacement of the tangent test. (Default: 2e-4)

    """

    q1_values: list[float] = field(default_factory=lambda: [0.0, 0.01, 0.02, 0.04])
    q2_min: float = 0.0006
    q2_max: float = 0.005
    num_q2: int = 20
    oracle: bool = True
    oracle_method: QuadratureMethod = QuadratureMethod.REDUCED_2D
    oracle_relative_tolerance: float = 1e-10
    gap: float = 0.0009
    cutoffs: list[float] = field(default_factory=lambda: [0.045, 0.05, 0.06, 0.07])
    half_width: float = 0.03
    orders: list[int] = field(default_factory=lambda: [1, 2, 3, 4, 5])
    points_per_length: list[float] = field(
        default_factory=lambda: [400.0, 800.0, 1600.0, 3200.0, 6400.0]
    )
    num_columns: int = 20
    perturbation: float = 2e-4

    def __post_init__(self) -> None:
        _check_positive(self, ("q2_min", "gap", "half_width", "perturbation"))
        if not self.q2_max > self.q2_min:
            raise ValueError(
                f"Invalid q2_max value: {self.q2_max}. Must be > q2_min = {self.q2_min}."
            )
        for name in ("num_q2", "num_columns"):
            if getattr(self, name) < 1:
                raise ValueError(f"Invalid {name} value: {getattr(self, name)}. Must be >= 1.")
        for name in ("cutoffs", "points_per_length"):
            if not all(value > 0.0 for value in getattr(self, name)):
                raise ValueError(
                    f"Invalid {name} value: {getattr(self, name)}. Must be > 0.0."
                )

    def quadrature_spec(self) -> QuadratureSpec:
        return QuadratureSpec(
            method=self.oracle_method,
            relative_tolerance=self.oracle_relative_tolerance,
        )


@dataclass(kw_only=True)
class ScenarioConfig:
    """A scenario run; every section defaults to the reference fiber setup.

    Attributes:
        scenario (ScenarioName): Scenario to run.
        seed (int): Seed of all random number generators. (Default: 2022)
        threads (int | None): Intra-op threads of torch; None keeps the torch default. (Default: None)
        output_dir (str): Directory of the result files. (Default: "results")

    """

    scenario: ScenarioName
    seed: int = 2022
    threads: int | None = None
    output_dir: str = "results"
    law: LawSettings = field(default_factory=LawSettings)
    geometry: GeometrySettings = field(default_factory=GeometrySettings)
    discretization: DiscretizationSettings = field(default_factory=DiscretizationSettings)
    interaction: InteractionSettings = field(default_factory=InteractionSettings)
    solver: SolverSettings = field(default_factory=SolverSettings)
    study: StudySettings = field(default_factory=StudySettings)

    def __post_init__(self) -> None:
        if self.threads is not None and self.threads < 1:
            raise ConfigValidationError(
                f"Invalid threads value: {self.threads}. Must be >= 1.", "threads"
            )
        for section, build in (
            ("law", self.law.build),
            ("geometry", self.geometry.build),
            ("interaction", lambda: self.interaction.build(self.discretization)),
            ("solver", self.solver.build),
            ("study", self.study.quadrature_spec),
        ):
            try:
                build()
            except ValueError as error:
                raise _section_error(error, section) from error
        if (
            self.scenario in (ScenarioName.PEEL, ScenarioName.TANGENT_TEST)
            and self.solver.youngs_modulus is None
        ):
            raise ConfigValidationError(
                f"Missing key 'solver.youngs_modulus'. The {self.scenario.value} scenario requires the material stiffness.",
                "solver.youngs_modulus",
            )
        if self.scenario == ScenarioName.PEEL and (
            self.geometry.radius_x != self.geometry.radius_y
            or self.geometry.beta_x != self.geometry.beta_y
        ):
            raise ConfigValidationError(
                "Invalid geometry value: the peel scenario needs equal radii and particle densities.",
                "geometry",
            )

    def peel_setup(self) -> PeelSetup:
        assert self.solver.youngs_modulus is not None
        return PeelSetup(
            youngs_modulus=self.solver.youngs_modulus,
            length=self.geometry.length,
            radius=self.geometry.radius_x,
            beta=self.geometry.beta_x,
            degree=self.discretization.degree,
            num_control_points=self.discretization.num_control_points,
            initial_gap=self.geometry.initial_gap,
        )


def _section_error(error: ValueError, path: str) -> ConfigValidationError:
    if isinstance(error, ConfigValidationError):
        return error
    found = _FIELD_IN_MESSAGE.match(str(error))
    return ConfigValidationError(
        str(error), _join(path, found.group(1)) if found else path
    )


def _convert(value: Any, annotation: Any, path: str) -> Any:
    origin = get_origin(annotation)
    if origin is types.UnionType:
        if value is None and type(None) in get_args(annotation):
            return None
        (inner,) = (arg for arg in get_args(annotation) if arg is not type(None))
        return _convert(value, inner, path)
    if origin is list:
        if not isinstance(value, list):
            raise ConfigValidationError(
                f"Invalid {path} value: {value!r}. Must be a list.", path
            )
        (item_type,) = get_args(annotation)
        return [
            _convert(item, item_type, f"{path}[{index}]")
            for index, item in enumerate(value)
        ]
    if is_dataclass(annotation):
        return _build(annotation, value, path)
    if isinstance(annotation, type) and issubclass(annotation, enum.Enum):
        try:
            return annotation(value)
        except (TypeError, ValueError):
            raise ConfigValidationError(
                f"Invalid {path} value: {value!r}. Must be one of {[member.value for member in annotation]}.",
                path,
            ) from None

    if annotation not in _SCALAR_TYPES:
        raise NotImplementedError(f"{annotation=} is not supported.")
    # bool is a subclass of int but never a valid number here.
    if isinstance(value, bool) != (annotation is bool) or not isinstance(
        value, _SCALAR_TYPES[annotation]
    ):
        raise ConfigValidationError(
            f"Invalid {path} value: {value!r}. Must be of type {annotation.__name__}.",
            path,
        )
    return float(value) if annotation is float else value


def _build(cls: type, data: Any, path: str) -> Any:
    if not isinstance(data, dict):
        raise ConfigValidationError(
            f"Invalid {path or 'document'} value: {data!r}. Must be an object.", path
        )
    init_fields = {config_field.name: config_field for config_field in fields(cls) if config_field.init}
    for key in data:
        if key not in init_fields:
            raise ConfigValidationError(
                f"Unknown key '{_join(path, key)}'. Must be one of {sorted(init_fields)}.",
                _join(path, key),
            )
    for name, config_field in init_fields.items():
        if (
            name not in data
            and config_field.default is MISSING
            and config_field.default_factory is MISSING
        ):
            raise ConfigValidationError(f"Missing key '{_join(path, name)}'.", _join(path, name))

    hints = get_type_hints(cls)
    kwargs = {key: _convert(value, hints[key], _join(path, key)) for key, value in data.items()}
    try:
        return cls(**kwargs)
    except ValueError as error:
        raise _section_error(error, path) from error


def _reject_duplicates(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    keys = [key for key, _ in pairs]
    if duplicates := sorted({key for key in keys if keys.count(key) > 1}):
        raise ConfigValidationError(f"Duplicate keys {duplicates}.", duplicates[0])
    return dict(pairs)


def _reject_constant(constant: str) -> float:
    raise ConfigValidationError(f"Invalid number {constant}. Must be finite.")


def _load_tree(text: str) -> dict[str, Any]:
    try:
        tree = json.loads(
            text, object_pairs_hook=_reject_duplicates, parse_constant=_reject_constant
        )
    except json.JSONDecodeError as error:
        raise ConfigValidationError(
            f"Invalid JSON at line {error.lineno}, column {error.colno}: {error.msg}."
        ) from error
    if not isinstance(tree, dict):
        raise ConfigValidationError(
            f"Invalid document value: {tree!r}. Must be an object."
        )
    return tree


def apply_overrides(tree: dict[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    """Sets key.path=value entries in the parsed document; values are JSON literals where they parse, else strings."""
    for override in overrides:
        key_path, separator, raw_value = override.partition("=")
        if not separator or not key_path:
            raise ConfigValidationError(
                f"Invalid override value: {override!r}. Must be key.path=value."
            )
        *parents, leaf = key_path.split(".")
        node = tree
        for depth, key in enumerate(parents):
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigValidationError(
                    f"Invalid override value: {override!r}. '{'.'.join(parents[: depth + 1])}' is not an object.",
                    key_path,
                )
        try:
            node[leaf] = json.loads(raw_value, parse_constant=_reject_constant)
        except json.JSONDecodeError:
            node[leaf] = raw_value
    return tree


def config_parse(text: str, overrides: Sequence[str] = ()) -> ScenarioConfig:
    """Strict parse of a JSON scenario document.

    Unknown keys, wrong types and violated constraints raise ConfigValidationError naming the dotted path of the
    field.
    """
    return _build(ScenarioConfig, apply_overrides(_load_tree(text), overrides), "")


def load_config(path: str | Path, overrides: Sequence[str] = ()) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as error:
        raise ConfigValidationError(f"Cannot read config file {path}: {error.strerror}.") from error
    return config_parse(text, overrides)


def _canonical_value(items: list[tuple[str, Any]]) -> dict[str, Any]:
    return {key: value.value if isinstance(value, enum.Enum) else value for key, value in items}


def canonical_json(config: ScenarioConfig) -> str:
    """Complete document with every default spelled out, keys sorted; config_parse reads it back unchanged."""
    return json.dumps(asdict(config, dict_factory=_canonical_value), indent=2, sort_keys=True)
