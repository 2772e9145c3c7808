"""Experiment runner: config in, artifacts out.

Builds the kernel-derived objects once, lazily simulates whichever
ensembles the requested claims need, evaluates the claims, and persists
constants.json, report.json, and plot-ready moment series.  Everything
emitted is a pure function of the config (wall-clock data goes to stderr
only), so identical runs produce byte-identical artifacts.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import numpy as np

from .. import moments
from ..constants import moment_constants
from ..kernel import build_profile, load_profile_csv, make_bump_kernel
from ..flow.distance import max_stable_dt, simulate_distance_ensemble
from ..flow.npoint import simulate_npoint_ensemble
from .claims import REGISTRY, ClaimResult
from .config import ConfigError, ExperimentConfig

REPORT_SCHEMA_VERSION = 1


class Heartbeat:
    """Throttled progress lines on stderr (at most one per second)."""

    def __init__(self, stream=None, min_interval: float = 1.0):
        self.stream = stream if stream is not None else sys.stderr
        self.min_interval = min_interval
        self._last = 0.0
        self.label = ""

    def __call__(self, step: int, total: int) -> None:
        now = time.monotonic()
        if now - self._last >= self.min_interval or step == total:
            self._last = now
            print(f"progress: {self.label} {step}/{total}", file=self.stream, flush=True)


class RunContext:
    """Lazily built shared state for claim evaluation."""

    def __init__(self, config: ExperimentConfig, progress=None):
        self.config = config
        self.progress = progress
        if config.kernel.type == "bump":
            self.kernel = make_bump_kernel(config.kernel.epsilon)
            self.profile = build_profile(self.kernel)
        else:
            self.kernel = None
            self.profile = load_profile_csv(config.kernel.table_path)
        self.constants = moment_constants(self.profile, self.kernel)
        pts = sorted(config.particles)
        self.v = float(pts[0]) if len(pts) > 0 else 0.0
        self.u = float(pts[1]) if len(pts) > 1 else self.v + 1.0
        self._cache = {}

    def _record_times(self):
        rec = self.config.dynamics.record_times
        if rec:
            return list(rec)
        t_max = self.config.dynamics.t_max
        return sorted({t_max * f for f in (0.0, 0.1, 0.25, 0.5, 0.75, 1.0)})

    def _label(self, kind: str) -> str:
        if self.progress is not None and hasattr(self.progress, "label"):
            self.progress.label = kind
        return kind

    @property
    def distance(self):
        if "distance" not in self._cache:
            cfg = self.config
            dt = min(cfg.dynamics.dt, max_stable_dt(self.profile))
            self._cache["distance"] = simulate_distance_ensemble(
                self.profile, xi0=self.u - self.v, t_max=cfg.dynamics.t_max,
                dt=dt, replications=cfg.ensemble.replications,
                base_seed=cfg.ensemble.base_seed,
                record_times=self._record_times(),
                antithetic=cfg.ensemble.antithetic,
                label=self._label("distance"), progress=self.progress,
            )
        return self._cache["distance"]

    @property
    def pair(self):
        if "pair" not in self._cache:
            cfg = self.config
            self._cache["pair"] = simulate_npoint_ensemble(
                self.profile, [self.v, self.u], t_max=cfg.dynamics.t_max,
                dt=cfg.dynamics.dt, replications=cfg.ensemble.replications,
                base_seed=cfg.ensemble.base_seed,
                record_times=self._record_times(),
                antithetic=cfg.ensemble.antithetic,
                label=self._label("pair"), progress=self.progress,
            )
        return self._cache["pair"]

    @property
    def quad(self):
        if "quad" not in self._cache:
            cfg = self.config
            pts = sorted(cfg.particles)[:4]
            self._cache["quad"] = simulate_npoint_ensemble(
                self.profile, pts, t_max=cfg.dynamics.t_max,
                dt=cfg.dynamics.dt, replications=cfg.ensemble.replications,
                base_seed=cfg.ensemble.base_seed,
                record_times=self._record_times(),
                antithetic=cfg.ensemble.antithetic,
                label=self._label("quad"), progress=self.progress,
            )
        return self._cache["quad"]


def _write_series_csv(ctx: RunContext, out_dir: Path) -> None:
    ens = ctx._cache.get("distance")
    if ens is None:
        return
    d = ctx.u - ctx.v
    c = ctx.constants
    targets = {
        1: lambda t: d,
        2: lambda t: 0.5 * (2 * c.c_star + 2 * c.c_upper_star) * abs(d) * np.sqrt(t),
        3: lambda t: 6.0 * d * t,
        4: lambda t: 0.5 * (16 * c.c_star + 16 * c.c_upper_star) * abs(d) * t**1.5,
    }
    for m, target in targets.items():
        lines = ["t,estimate,stderr,target"]
        for t in ens.times:
            if t <= 0:
                continue
            est = moments.estimate_distance_moment(ens, m, t)
            lines.append(
                f"{float(t)!r},{est.value!r},{est.std_error!r},{float(target(t))!r}"
            )
        (out_dir / f"h{m}_series.csv").write_text("\n".join(lines) + "\n")


def run_experiment(
    config: ExperimentConfig,
    output: str | None = None,
    progress=None,
) -> dict:
    """Execute the experiment and write artifacts; returns the report dict."""
    out_dir = Path(output if output is not None else config.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(config, progress=progress)
    (out_dir / "constants.json").write_text(ctx.constants.to_json())

    results: list[ClaimResult] = []
    for claim_id in config.claims:
        spec = REGISTRY[claim_id]
        try:
            results.append(spec.evaluate(ctx))
        except ValueError as exc:
            # an evaluator that cannot run on this config (e.g. too few
            # recorded times for a fit) reports as a failed claim rather
            # than aborting the whole run
            results.append(ClaimResult(
                claim_id=claim_id, anchor=spec.anchor,
                estimate=float("nan"), target=float("nan"),
                tolerance=float("nan"), passed=False,
                detail={"error": str(exc)},
            ))

    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "config_digest": config.digest(),
        "constants": json.loads(ctx.constants.to_json()),
        "claims": [r.to_record() for r in results],
    }
    (out_dir / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n"
    )
    _write_series_csv(ctx, out_dir)
    return report


def load_report(path) -> dict:
    with open(path) as fh:
        report = json.load(fh)
    major = int(str(report.get("schema_version", 0)).split(".")[0])
    if major != REPORT_SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema_version {major}")
    if "claims" not in report:
        raise ValueError("report has no claims section")
    return report
