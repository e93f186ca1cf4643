"""Declarative experiment configs: TOML parsing, schema validation and domain-object resolution."""
import re
from copy import deepcopy
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import toml
from jsonschema import Draft202012Validator
from jsonschema.exceptions import best_match

from ..core.errors import ConfigError
from ..core.objective import OBJECTIVE_PRESETS, ObjectiveSpec, objective_from_preset
from ..core.quasi_distance import QUASI_DISTANCE_PRESETS, QuasiDistance, quasi_distance_from_preset
from ..core.resistance import RESISTANCE_KINDS, ResistanceProfile, resistance_from_preset
from ..core.schedule import ExperienceModel, ProximalSchedule, StepSequence
from ..core.settings import SolverSettings
from ..core.space import Point, SearchSpace, SpaceKind
from ..solvers.property_checks import PROPERTY_CHECKS
from ..solvers.proposals import ProposalPolicy

MODES = (
    "global", "exact-prox", "inexact-prox", "local-prox", "min-over-W",
    "trap-sweep", "habit", "lambda-sweep", "probes",
)
TRAJECTORY_MODES = ("exact-prox", "inexact-prox", "local-prox", "min-over-W", "habit")
GRID_ONLY_MODES = ("global", "min-over-W")
NEEDS_X0 = TRAJECTORY_MODES + ("trap-sweep", "lambda-sweep")
NEEDS_LAMBDAS = ("trap-sweep", "lambda-sweep")
OVERRIDABLE = ("objective", "quasi_distance", "resistance", "space", "schedule", "experience", "solver", "probes")

DEFAULT_PROBES = {
    "instances": 100,
    "checks": list(PROPERTY_CHECKS),
    "axiom_samples": 1000,
    "pairs": 1000,
    "kl_samples": 1000,
    "kl_c": 1.0,
    "lambda": 1.0,
}

_NUMBERS = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

SEQUENCE_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["constant", "geometric", "table"]},
        "value": {"type": "number"},
        "start": {"type": "number"},
        "ratio": {"type": "number", "exclusiveMinimum": 0},
        "floor": {"type": "number", "minimum": 0},
        "values": _NUMBERS,
    },
    "additionalProperties": False,
}

RUN_SCHEMA = {
    "type": "object",
    "required": ["name", "mode"],
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "mode": {"enum": list(MODES)},
        "x0": _NUMBERS,
        "proposal": {"enum": [p.value for p in ProposalPolicy]},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "lambdas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "overrides": {"type": "object", "propertyNames": {"enum": list(OVERRIDABLE)}},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["objective", "space", "runs"],
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string", "minLength": 1},
        "objective": {
            "type": "object",
            "required": ["preset"],
            "properties": {"preset": {"enum": list(OBJECTIVE_PRESETS)}, "params": {"type": "object"}},
            "additionalProperties": False,
        },
        "quasi_distance": {
            "type": "object",
            "required": ["preset"],
            "properties": {"preset": {"enum": list(QUASI_DISTANCE_PRESETS)}, "params": {"type": "object"}},
            "additionalProperties": False,
        },
        "resistance": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": list(RESISTANCE_KINDS)}, "params": {"type": "object"}},
            "additionalProperties": False,
        },
        "space": {
            "type": "object",
            "required": ["kind", "lower", "upper"],
            "properties": {
                "kind": {"enum": [k.value for k in SpaceKind]},
                "lower": _NUMBERS,
                "upper": _NUMBERS,
                "resolution": {
                    "oneOf": [
                        {"type": "integer", "minimum": 1},
                        {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                    ]
                },
            },
            "additionalProperties": False,
        },
        "schedule": {
            "type": "object",
            "properties": {
                "lambda": SEQUENCE_SCHEMA,
                "mu": SEQUENCE_SCHEMA,
                "epsilon": SEQUENCE_SCHEMA,
                "lambda_floor": {"type": "number", "minimum": 0},
                "max_steps": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "experience": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["constant", "geometric", "recency"]},
                "v0": {"type": "number", "exclusiveMinimum": 0},
                "rho": {"type": "number", "exclusiveMinimum": 0},
                "base": {"type": "number", "exclusiveMinimum": 0},
                "scale": {"type": "number", "minimum": 0},
                "eta": SEQUENCE_SCHEMA,
            },
            "additionalProperties": False,
        },
        "solver": {"type": "object"},
        "probes": {
            "type": "object",
            "properties": {
                "instances": {"type": "integer", "minimum": 1},
                "checks": {"type": "array", "items": {"enum": list(PROPERTY_CHECKS)}, "uniqueItems": True},
                "axiom_samples": {"type": "integer", "minimum": 1},
                "pairs": {"type": "integer", "minimum": 0},
                "kl_samples": {"type": "integer", "minimum": 0},
                "kl_c": {"type": "number", "exclusiveMinimum": 0},
                "lambda": {"type": "number", "exclusiveMinimum": 0},
                "comparability": {**_PAIR, "items": {"type": "number", "exclusiveMinimum": 0}},
                "power_bound": _PAIR,
            },
            "additionalProperties": False,
        },
        "runs": {"type": "array", "minItems": 1, "items": RUN_SCHEMA},
    },
    "additionalProperties": False,
}

_VALIDATOR = Draft202012Validator(CONFIG_SCHEMA)


@dataclass(frozen=True)
class RunSpec:
    """One [[runs]] entry as written in the config."""

    name: str
    mode: str
    x0: Optional[Tuple[float, ...]] = None
    proposal: str = ProposalPolicy.EXACT_INNER_MIN.value
    radius: Optional[float] = None
    lambdas: Tuple[float, ...] = ()
    overrides: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunSpec":
        return cls(
            name=data["name"],
            mode=data["mode"],
            x0=tuple(float(v) for v in data["x0"]) if "x0" in data else None,
            proposal=data.get("proposal", ProposalPolicy.EXACT_INNER_MIN.value),
            radius=float(data["radius"]) if "radius" in data else None,
            lambdas=tuple(float(v) for v in data.get("lambdas", ())),
            overrides=deepcopy(data.get("overrides", {})),
        )

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"name": self.name, "mode": self.mode, "proposal": self.proposal}
        if self.x0 is not None:
            data["x0"] = list(self.x0)
        if self.radius is not None:
            data["radius"] = self.radius
        if self.lambdas:
            data["lambdas"] = list(self.lambdas)
        if self.overrides:
            data["overrides"] = deepcopy(self.overrides)
        return data


@dataclass(frozen=True)
class ExperimentConfig:
    """A parsed experiment config; sections stay plain data until a run is resolved.

    Attributes:
        seed: Seed of every sampling stream
        output_dir: Where run outputs go
        objective: [objective] table
        quasi_distance: [quasi_distance] table
        resistance: [resistance] table
        space: [space] table
        schedule: [schedule] table
        experience: [experience] table
        solver: [solver] overrides of SolverSettings
        probes: [probes] table
        runs: The [[runs]] entries
        source: Raw config text, used to locate fields by line
    """

    seed: int
    output_dir: str
    objective: Dict[str, Any]
    space: Dict[str, Any]
    runs: Tuple[RunSpec, ...]
    quasi_distance: Dict[str, Any] = field(default_factory=lambda: {"preset": "euclidean"})
    resistance: Dict[str, Any] = field(default_factory=lambda: {"kind": "quadratic"})
    schedule: Dict[str, Any] = field(default_factory=dict)
    experience: Dict[str, Any] = field(default_factory=dict)
    solver: Dict[str, Any] = field(default_factory=dict)
    probes: Dict[str, Any] = field(default_factory=dict)
    source: Optional[str] = field(default=None, compare=False, repr=False)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], source: Optional[str] = None) -> "ExperimentConfig":
        error = best_match(_VALIDATOR.iter_errors(data))
        if error is not None:
            path = _field_path(error.absolute_path)
            raise ConfigError(error.message, field=path or None, line=_locate(source, path))
        data = deepcopy(data)
        config = cls(
            seed=int(data.get("seed", 0)),
            output_dir=data.get("output_dir", "out"),
            objective=data["objective"],
            space=data["space"],
            runs=tuple(RunSpec.from_dict(run) for run in data["runs"]),
            quasi_distance=data.get("quasi_distance", {"preset": "euclidean"}),
            resistance=data.get("resistance", {"kind": "quadratic"}),
            schedule=data.get("schedule", {}),
            experience=data.get("experience", {}),
            solver=data.get("solver", {}),
            probes=data.get("probes", {}),
            source=source,
        )
        config.validate()
        return config

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"seed": self.seed, "output_dir": self.output_dir}
        for name in ("objective", "quasi_distance", "resistance", "space", "schedule",
                     "experience", "solver", "probes"):
            section = getattr(self, name)
            if section:
                data[name] = deepcopy(section)
        data["runs"] = [run.to_dict() for run in self.runs]
        return data

    def with_overrides(self, seed: Optional[int] = None, output_dir: Optional[str] = None) -> "ExperimentConfig":
        config = self
        if seed is not None:
            config = replace(config, seed=int(seed))
        if output_dir is not None:
            config = replace(config, output_dir=str(output_dir))
        return config

    def validate(self) -> None:
        """Resolve every run so that domain invariants surface as ConfigError."""
        names = [run.name for run in self.runs]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ConfigError(f"duplicate run names {duplicates}", field="runs")
        for index in range(len(self.runs)):
            resolve_run(self, index)


@dataclass(frozen=True)
class RunContext:
    """A run with every section turned into domain objects."""

    index: int
    spec: RunSpec
    f: ObjectiveSpec
    q: QuasiDistance
    gamma: ResistanceProfile
    space: SearchSpace
    schedule: ProximalSchedule
    experience: ExperienceModel
    settings: SolverSettings
    probes: Dict[str, Any]
    x0: Optional[Point]

    @property
    def proposal(self) -> ProposalPolicy:
        return ProposalPolicy(self.spec.proposal)


def _field_path(parts) -> str:
    path = ""
    for part in parts:
        path += f"[{part}]" if isinstance(part, int) else (f".{part}" if path else str(part))
    return path


def _locate(source: Optional[str], path: Optional[str]) -> Optional[int]:
    """Best-effort line of a dotted field path in the TOML text."""
    if not source or not path:
        return None
    parts = re.findall(r"[A-Za-z_][A-Za-z0-9_-]*|\[\d+\]", path)
    lines = source.splitlines()
    section, run_index, start = None, None, 0
    if parts and parts[0] == "runs":
        section = "[[runs]]"
        run_index = int(parts[1][1:-1]) if len(parts) > 1 and parts[1].startswith("[") else 0
    elif parts:
        section = f"[{parts[0]}]"
    if section:
        seen = -1
        for i, line in enumerate(lines):
            if line.strip() == section:
                seen += 1
                if run_index is None or seen == run_index:
                    start = i
                    break
        else:
            return None
    key = parts[-1] if parts and not parts[-1].startswith("[") else None
    if key and key != parts[0]:
        pattern = re.compile(rf"^\s*{re.escape(key)}\s*=")
        for i in range(start, len(lines)):
            if i > start and lines[i].lstrip().startswith("[") and "=" not in lines[i]:
                break
            if pattern.match(lines[i]):
                return i + 1
    return start + 1


def _merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = deepcopy(value)
    return merged


def _error(config: ExperimentConfig, message: str, path: str) -> ConfigError:
    return ConfigError(message, field=path, line=_locate(config.source, path))


def build_space(section: Dict[str, Any], cap: int) -> SearchSpace:
    kind = SpaceKind(section["kind"])
    if kind is SpaceKind.CONTINUOUS_BOX:
        return SearchSpace.box(section["lower"], section["upper"])
    if "resolution" not in section:
        raise ConfigError("finite grids need a resolution", field="space.resolution")
    return SearchSpace.grid(section["lower"], section["upper"], section["resolution"], cap=cap)


def build_schedule(section: Dict[str, Any]) -> ProximalSchedule:
    def sequence(key: str, default: StepSequence) -> StepSequence:
        if key not in section:
            return default
        return StepSequence.from_dict(section[key], f"schedule.{key}")

    return ProximalSchedule(
        lam=sequence("lambda", StepSequence.constant(1.0)),
        mu=sequence("mu", StepSequence.constant(1.0)),
        epsilon=sequence("epsilon", StepSequence.geometric(0.0, 0.5)),
        lambda_floor=float(section.get("lambda_floor", 0.0)),
        max_steps=int(section.get("max_steps", 1000)),
    )


def build_experience(section: Dict[str, Any], schedule: ProximalSchedule) -> ExperienceModel:
    if not section:
        return ExperienceModel.constant(1.0, schedule.lam)
    return ExperienceModel.from_dict(section)


def resolve_run(config: ExperimentConfig, index: int) -> RunContext:
    """
    Build the domain objects of one run, with its overrides merged over the base sections.

    Raises:
        ConfigError: Naming the offending field, with its line when it can be located
    """
    run = config.runs[index]
    prefix = f"runs[{index}]"
    sections = {name: getattr(config, name) for name in OVERRIDABLE}
    sections = _merge(sections, run.overrides)

    section = "solver"
    try:
        settings = SolverSettings.from_dict(sections["solver"])
        if "seed" not in sections["solver"]:
            settings = replace(settings, seed=config.seed)
        section = "space"
        space = build_space(sections["space"], settings.grid_cap)
        section = "objective"
        f = objective_from_preset(sections["objective"]["preset"], sections["objective"].get("params"), space.dim)
        section = "quasi_distance"
        q = quasi_distance_from_preset(sections["quasi_distance"]["preset"], sections["quasi_distance"].get("params"))
        section = "resistance"
        gamma = resistance_from_preset(sections["resistance"]["kind"], sections["resistance"].get("params"))
        section = "schedule"
        schedule = build_schedule(sections["schedule"])
        section = "experience"
        experience = build_experience(sections["experience"], schedule)
    except ConfigError as exc:
        path = exc.field or section
        if section in run.overrides:
            path = f"{prefix}.overrides.{path}"
        raise _error(config, exc.message, path) from exc
    except (TypeError, ValueError) as exc:
        path = f"{prefix}.overrides.{section}" if section in run.overrides else section
        raise _error(config, str(exc), path) from exc

    if run.mode in GRID_ONLY_MODES and not space.is_grid:
        raise _error(config, f"mode {run.mode!r} needs a finite-grid space", f"{prefix}.mode")
    if run.mode == "min-over-W" or run.proposal == ProposalPolicy.WORTHWHILE_MIN.value:
        if not space.is_grid:
            raise _error(config, "worthwhile-min proposals need a finite-grid space", f"{prefix}.proposal")
    if run.mode == "local-prox" or run.proposal == ProposalPolicy.LOCAL_EXACT.value:
        if run.radius is None:
            raise _error(config, f"mode {run.mode!r} needs a radius", f"{prefix}.radius")
    if run.mode in NEEDS_LAMBDAS and not run.lambdas:
        raise _error(config, f"mode {run.mode!r} needs a lambdas list", f"{prefix}.lambdas")
    if run.mode == "trap-sweep" and any(b <= a for a, b in zip(run.lambdas, run.lambdas[1:])):
        raise _error(config, "trap-sweep lambdas must be strictly ascending", f"{prefix}.lambdas")

    x0 = None
    if run.mode in NEEDS_X0:
        if run.x0 is None:
            raise _error(config, f"mode {run.mode!r} needs x0", f"{prefix}.x0")
        if len(run.x0) != space.dim:
            raise _error(config, f"x0 has dimension {len(run.x0)}, space has {space.dim}", f"{prefix}.x0")
        try:
            x0 = space.snap(run.x0)
        except ValueError as exc:
            raise _error(config, str(exc), f"{prefix}.x0") from exc
        if not space.contains(x0):
            raise _error(config, f"x0 = {list(run.x0)} lies outside the space", f"{prefix}.x0")
        try:
            f0 = f(x0)
        except (IndexError, ValueError) as exc:
            raise _error(config, f"objective cannot be evaluated at x0: {exc}", "objective") from exc
        if not f0 < float("inf"):
            raise _error(config, "f(x0) must be finite", f"{prefix}.x0")

    probes = {**DEFAULT_PROBES, **sections["probes"]}
    return RunContext(index, run, f, q, gamma, space, schedule, experience, settings, probes, x0)


def parse_config_text(text: str) -> ExperimentConfig:
    try:
        data = toml.loads(text)
    except toml.TomlDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc.msg}", line=exc.lineno) from exc
    return ExperimentConfig.from_dict(data, source=text)


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Read, validate and resolve an experiment config file.

    Args:
        path (Union[str, Path]): TOML config path

    Returns:
        ExperimentConfig: The parsed config; every run resolves without error

    Raises:
        ConfigError: Unreadable file, invalid TOML, schema violation or invalid domain parameter
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror or exc}", field=str(path)) from exc
    return parse_config_text(text)


def dump_config(config: ExperimentConfig) -> str:
    return toml.dumps(config.to_dict())


def resolve_runs(config: ExperimentConfig, modes: Optional[List[str]] = None) -> List[RunContext]:
    return [resolve_run(config, i) for i, run in enumerate(config.runs) if modes is None or run.mode in modes]
