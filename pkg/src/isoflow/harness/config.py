"""Declarative experiment configuration.

One JSON file describes one experiment: kernel, particles, integration
window, ensemble size and seeding, and the claims to verify.  Configs are
validated eagerly and round-trip exactly through parse -> serialize ->
parse.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict

CONFIG_SCHEMA_VERSION = 1

MIN_REPLICATIONS = 100


class ConfigError(ValueError):
    """Invalid experiment configuration; message lists every finding."""


@dataclass(frozen=True)
class KernelConfig:
    type: str = "bump"            # "bump" | "table"
    epsilon: float = 1.0
    table_path: str | None = None


@dataclass(frozen=True)
class DynamicsConfig:
    dt: float = 0.0032
    t_max: float = 100.0
    record_times: tuple = ()


@dataclass(frozen=True)
class EnsembleConfig:
    replications: int = 10_000
    base_seed: int = 20260809
    antithetic: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    kernel: KernelConfig = field(default_factory=KernelConfig)
    particles: tuple = (0.0, 1.0)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    claims: tuple = ()
    output: str = "results"

    def to_dict(self) -> dict:
        rec = asdict(self)
        rec["schema_version"] = CONFIG_SCHEMA_VERSION
        rec["particles"] = list(self.particles)
        rec["claims"] = list(self.claims)
        rec["dynamics"]["record_times"] = list(self.dynamics.record_times)
        return rec

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def config_from_dict(rec: dict, origin: str = "<config>") -> ExperimentConfig:
    rec = dict(rec)
    major = int(str(rec.pop("schema_version", CONFIG_SCHEMA_VERSION)).split(".")[0])
    if major != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"{origin}: unsupported config schema_version {major}")
    known = {"kernel", "particles", "dynamics", "ensemble", "claims", "output"}
    unknown = set(rec) - known
    if unknown:
        raise ConfigError(f"{origin}: unknown top-level keys {sorted(unknown)}")
    try:
        kern = KernelConfig(**rec.get("kernel", {}))
        dyn = dict(rec.get("dynamics", {}))
        if "record_times" in dyn:
            dyn["record_times"] = tuple(dyn["record_times"])
        dynamics = DynamicsConfig(**dyn)
        ens = EnsembleConfig(**rec.get("ensemble", {}))
    except TypeError as exc:
        raise ConfigError(f"{origin}: {exc}") from exc
    return ExperimentConfig(
        kernel=kern,
        particles=tuple(rec.get("particles", (0.0, 1.0))),
        dynamics=dynamics,
        ensemble=ens,
        claims=tuple(rec.get("claims", ())),
        output=rec.get("output", "results"),
    )


def load_config(path) -> ExperimentConfig:
    """Parse and validate a config file; ConfigError messages carry the
    file name and, for syntax errors, the line and column."""
    with open(path) as fh:
        text = fh.read()
    try:
        rec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    config = config_from_dict(rec, origin=str(path))
    problems = validate(config)
    if problems:
        raise ConfigError("; ".join(f"{path}: {p}" for p in problems))
    return config


def save_config(config: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        fh.write(config.to_json())


def validate(config: ExperimentConfig) -> list[str]:
    """Structural validation; returns a list of problems (empty if valid)."""
    from .claims import REGISTRY  # local import to avoid a cycle

    problems: list[str] = []
    k = config.kernel
    if k.type not in ("bump", "table"):
        problems.append(f"kernel.type must be 'bump' or 'table', got {k.type!r}")
    if k.type == "bump" and not (k.epsilon and k.epsilon > 0):
        problems.append(f"kernel.epsilon must be positive, got {k.epsilon!r}")
    if k.type == "table" and not k.table_path:
        problems.append("kernel.table_path is required for table kernels")

    pts = config.particles
    if len(pts) < 1:
        problems.append("particles must contain at least one point")
    elif any(b <= a for a, b in zip(pts, pts[1:])):
        problems.append(f"particles must be strictly increasing, got {list(pts)}")

    d = config.dynamics
    if d.dt <= 0:
        problems.append(f"dynamics.dt must be positive, got {d.dt!r}")
    if d.t_max <= 0:
        problems.append(f"dynamics.t_max must be positive, got {d.t_max!r}")
    bad_times = [t for t in d.record_times if not (0 <= t <= d.t_max)]
    if bad_times:
        problems.append(
            f"dynamics.record_times must lie in [0, t_max]; offending: {bad_times}"
        )

    e = config.ensemble
    if e.replications < MIN_REPLICATIONS:
        problems.append(
            f"ensemble.replications below minimum: {e.replications} < {MIN_REPLICATIONS}"
        )

    unknown = [c for c in config.claims if c not in REGISTRY]
    if unknown:
        problems.append(
            f"unknown claim identifiers {unknown}; registered: {sorted(REGISTRY)}"
        )
    for c in config.claims:
        if c in REGISTRY:
            need = REGISTRY[c].min_particles
            if len(pts) < need:
                problems.append(f"claim {c!r} needs at least {need} particles")
    return problems
