"""Tolerances and run configuration shared by the reports and the CLI."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields, replace
from dataclasses import field as dc_field

from .errors import SpecError

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances; every field can be overridden with ``--tol-<name>``.

    ``tau_bc=None`` means the field-dependent default (1e-9 closed form,
    1e-6 sampled).
    """

    tau_bc: float | None = None
    tau_norm: float = 1e-8
    tau_rt: float = 1e-6
    tau_ineq: float = 1e-9
    tau_eq: float = 0.02
    tau_chain: float = 0.02
    f_crit: float = 0.01
    q_noise: float = 0.01
    eps_grad_rel: float = 1e-6
    tau_env: float = 1e-6
    tau_val: float = 1e-6
    tau_straight: float = 1e-4
    tau_cv: float = 1e-3
    tau_prop5: float = 1e-3

    @classmethod
    def names(cls):
        return [f.name for f in fields(cls)]

    def updated(self, **overrides):
        bad = set(overrides) - set(self.names())
        if bad:
            raise SpecError(f"unknown tolerance(s): {', '.join(sorted(bad))}")
        for k, v in overrides.items():
            if v is not None and not v >= 0:
                raise SpecError(f"tolerance {k} must be non-negative")
        return replace(self, **overrides)

    def bc_for(self, fld) -> float:
        return fld.tau_bc if self.tau_bc is None else self.tau_bc

    def to_dict(self):
        return asdict(self)


def thread_count(default: int | None = None) -> int:
    """Worker cap from ``HESSDISC_THREADS`` (falls back to min(4, cpu count))."""
    env = os.environ.get("HESSDISC_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise SpecError("HESSDISC_THREADS must be an integer") from exc
        return max(1, n)
    if default is not None:
        return max(1, default)
    return max(1, min(4, os.cpu_count() or 1))


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration for one command invocation."""

    field: str = "paraboloid"
    resolution: int = 512
    levels: int = 100
    tolerances: Tolerances = dc_field(default_factory=Tolerances)
    out: str = "."
    format: str = "json"
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not 64 <= self.resolution <= 8192:
            raise SpecError("grid resolution must lie in [64, 8192]")
        if not 10 <= self.levels <= 10000:
            raise SpecError("level count must lie in [10, 10000]")
        if self.format not in ("json", "csv", "both"):
            raise SpecError("format must be json, csv or both")

    def to_dict(self):
        d = asdict(self)
        d["tolerances"] = self.tolerances.to_dict()
        return d
