"""Experiment harness: sweeps, the redundancy optimizer, and bound tables.

All outputs are deterministic: records are sorted by (m, trial, case) before
writing and floats are formatted with a fixed round-trip format, so re-running
a command with the same config yields byte-identical CSV.  Wall-clock timings
are kept on the in-memory records only and never serialized.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bounds import (
    BoundInputs,
    BoundReport,
    check_hypotheses,
    estimate_d_sm_side,
    gamma_d,
    thm1_central,
    thm1_side,
    thm2_central,
    thm2_side,
)
from .channel import TradeoffPoint, lower_left_hull, optimal_operating_point, tradeoff_curve
from .codecs import Scheme
from .config import ExperimentConfig
from .core import SEED_PURPOSE_MDSQ_TRAIN, derive_seed, rng_from_seed
from .errors import InvalidConfigError
from . import pipeline

__all__ = [
    "TrialRecord",
    "SummaryRow",
    "OptimizerReport",
    "BoundsRow",
    "run_sweep",
    "summarize",
    "run_optimizer",
    "run_bounds",
    "records_to_csv",
    "summary_to_csv",
    "curve_to_csv",
    "bounds_to_csv",
    "records_to_json",
    "write_text",
]

_CASE_ORDER = {
    pipeline.CASE_SIDE1: 0,
    pipeline.CASE_SIDE2: 1,
    pipeline.CASE_CENTRAL: 2,
    pipeline.CASE_LOST: 3,
}


@dataclass(frozen=True)
class TrialRecord:
    """One decode attempt of one trial of one configuration."""

    scheme: str
    n: int
    k: int
    m: int
    fine_bits: int
    coarse_bits: int
    spread: int
    sigma_x2: float
    p: float | None
    trial: int
    case: str
    mask: str
    rd: float
    rd_sq: float
    iterations: int
    status: str
    wall_ms: float  # in-memory only; excluded from CSV/JSON for determinism


@dataclass(frozen=True)
class SummaryRow:
    """Per (config, m, case) aggregate with a 95% normal confidence interval."""

    scheme: str
    n: int
    k: int
    m: int
    fine_bits: int
    coarse_bits: int
    spread: int
    p: float | None
    case: str
    count: int
    mean_rd: float
    ci95_rd: float
    mean_rd_sq: float
    ci95_rd_sq: float


def run_sweep(cfg: ExperimentConfig) -> list[TrialRecord]:
    """Run cfg.trials seeded trials for every m in the config."""
    records: list[TrialRecord] = []
    spread = cfg.spread if cfg.scheme == Scheme.MDSQ else 0
    for m in cfg.m_values:
        for trial in range(cfg.trials):
            for out in pipeline.run_trial(cfg, m, trial):
                records.append(
                    TrialRecord(
                        scheme=cfg.scheme.name.lower(),
                        n=cfg.n,
                        k=cfg.k,
                        m=m,
                        fine_bits=cfg.fine_bits,
                        coarse_bits=cfg.coarse_bits,
                        spread=spread,
                        sigma_x2=cfg.sigma_x2,
                        p=cfg.p,
                        trial=trial,
                        case=out.case,
                        mask=out.mask,
                        rd=out.rd,
                        rd_sq=out.rd_sq,
                        iterations=out.iterations,
                        status=out.status,
                        wall_ms=out.wall_ms,
                    )
                )
    records.sort(key=lambda r: (r.m, r.trial, _CASE_ORDER.get(r.case, 9)))
    return records


def summarize(records: list[TrialRecord]) -> list[SummaryRow]:
    """Aggregate records by (m, case)."""
    groups: dict[tuple, list[TrialRecord]] = {}
    for r in records:
        groups.setdefault((r.m, r.case), []).append(r)

    def ci95(values: np.ndarray) -> float:
        if len(values) < 2:
            return 0.0
        return 1.96 * float(np.std(values, ddof=1)) / math.sqrt(len(values))

    rows = []
    for (m, case), group in sorted(groups.items(), key=lambda kv: (kv[0][0], _CASE_ORDER.get(kv[0][1], 9))):
        rd = np.array([g.rd for g in group])
        rd_sq = np.array([g.rd_sq for g in group])
        first = group[0]
        rows.append(
            SummaryRow(
                scheme=first.scheme,
                n=first.n,
                k=first.k,
                m=m,
                fine_bits=first.fine_bits,
                coarse_bits=first.coarse_bits,
                spread=first.spread,
                p=first.p,
                case=case,
                count=len(group),
                mean_rd=float(rd.mean()),
                ci95_rd=ci95(rd),
                mean_rd_sq=float(rd_sq.mean()),
                ci95_rd_sq=ci95(rd_sq),
            )
        )
    return rows


@dataclass(frozen=True)
class OptimizerReport:
    """Redundancy selection for a loss rate: full curve, hull, chosen point."""

    p: float
    rate: int
    curve: list[TradeoffPoint]
    hull: list[TradeoffPoint]
    selected: TradeoffPoint

    @property
    def selected_rates(self) -> tuple[int, int]:
        return self.selected.fine_bits, self.selected.coarse_bits


def run_optimizer(cfg: ExperimentConfig, p: float, rate: int) -> OptimizerReport:
    """Sweep the rate splits at total rate `rate` and pick the best for p."""
    if not (0.0 <= p < 1.0):
        raise InvalidConfigError(f"p must be in [0, 1), got {p}")
    curve = tradeoff_curve(cfg, rate)
    usable = [pt for pt in curve if math.isfinite(pt.d_side) and math.isfinite(pt.d_central)]
    if not usable:
        raise InvalidConfigError("every configuration failed; nothing to optimize")
    hull = lower_left_hull(usable)
    selected = optimal_operating_point(hull, p)
    return OptimizerReport(p=p, rate=rate, curve=curve, hull=hull, selected=selected)


@dataclass(frozen=True)
class BoundsRow:
    """All four bound reports at one rate."""

    rate: int
    t1_side: BoundReport
    t1_central: BoundReport
    t2_side: BoundReport
    t2_central: BoundReport
    gamma: float | None
    d_sm_side: float
    checks: tuple


def run_bounds(
    n: int,
    m: int,
    k: int,
    sigma_x2: float,
    rates: list[int],
    mu: float | None = None,
    d_sm_side: float | None = None,
    spread: int = 1,
    lloyd_iters: int = 20,
    seed: int = 0,
) -> list[BoundsRow]:
    """Evaluate the bound calculator over a range of rates.

    When mu is not given it is taken from a freshly generated sensing matrix
    with the supplied seed.  When d_sm_side is not given it is estimated per
    rate from the deterministic MDSQ codebook protocol at that rate.
    """
    from .core import coherence, gen_sensing_matrix

    if mu is None:
        mu = coherence(gen_sensing_matrix(m, n, seed))
    rows = []
    for rate in rates:
        if d_sm_side is None:
            sigma_y = math.sqrt(k * sigma_x2 / m)
            scale = float(np.float32(4.0 * sigma_y))
            side_bits = min(rate, 8)
            ctx = pipeline.mdsq_context_for(scale, side_bits, min(spread, (1 << side_bits) - 1),
                                            lloyd_iters, seed)
            samples = rng_from_seed(derive_seed(seed, 1, SEED_PURPOSE_MDSQ_TRAIN)).normal(
                0.0, sigma_y, pipeline.TRAIN_SAMPLE_COUNT
            )
            dsm = estimate_d_sm_side(ctx.codebook, samples)
        else:
            dsm = d_sm_side
        inputs = BoundInputs(n=n, m=m, k=k, sigma_x2=sigma_x2, rate=rate, mu=mu, d_sm_side=dsm)
        rows.append(
            BoundsRow(
                rate=rate,
                t1_side=thm1_side(inputs),
                t1_central=thm1_central(inputs),
                t2_side=thm2_side(inputs),
                t2_central=thm2_central(inputs),
                gamma=gamma_d(dsm, sigma_x2, m, k, rate),
                d_sm_side=dsm,
                checks=tuple(check_hypotheses(inputs)),
            )
        )
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


RECORD_COLUMNS = [
    "scheme", "n", "k", "m", "B", "b", "spread", "sigma_x2", "p",
    "trial", "case", "mask", "rd", "rd_sq", "iterations", "status",
]


def records_to_csv(records: list[TrialRecord]) -> str:
    lines = [",".join(RECORD_COLUMNS)]
    for r in records:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    r.scheme, r.n, r.k, r.m, r.fine_bits, r.coarse_bits, r.spread,
                    r.sigma_x2, r.p, r.trial, r.case, r.mask, r.rd, r.rd_sq,
                    r.iterations, r.status,
                )
            )
        )
    return "\n".join(lines) + "\n"


def records_to_json(records: list[TrialRecord]) -> str:
    payload = [
        {
            "scheme": r.scheme, "n": r.n, "k": r.k, "m": r.m, "B": r.fine_bits,
            "b": r.coarse_bits, "spread": r.spread, "sigma_x2": r.sigma_x2, "p": r.p,
            "trial": r.trial, "case": r.case, "mask": r.mask, "rd": r.rd,
            "rd_sq": r.rd_sq, "iterations": r.iterations, "status": r.status,
        }
        for r in records
    ]
    return json.dumps(payload, indent=0, sort_keys=True) + "\n"


SUMMARY_COLUMNS = [
    "scheme", "n", "k", "m", "B", "b", "spread", "p", "case", "count",
    "mean_rd", "ci95_rd", "mean_rd_sq", "ci95_rd_sq",
]


def summary_to_csv(rows: list[SummaryRow]) -> str:
    lines = [",".join(SUMMARY_COLUMNS)]
    for s in rows:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    s.scheme, s.n, s.k, s.m, s.fine_bits, s.coarse_bits, s.spread, s.p,
                    s.case, s.count, s.mean_rd, s.ci95_rd, s.mean_rd_sq, s.ci95_rd_sq,
                )
            )
        )
    return "\n".join(lines) + "\n"


CURVE_COLUMNS = ["scheme", "B", "b", "spread", "d_side", "d_central", "trials",
                 "failures", "on_hull", "selected"]


def curve_to_csv(report: OptimizerReport) -> str:
    hull_keys = {(pt.fine_bits, pt.coarse_bits) for pt in report.hull}
    sel = (report.selected.fine_bits, report.selected.coarse_bits)
    lines = [",".join(CURVE_COLUMNS)]
    for pt in report.curve:
        key = (pt.fine_bits, pt.coarse_bits)
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    pt.scheme.name.lower(), pt.fine_bits, pt.coarse_bits, pt.spread,
                    pt.d_side, pt.d_central, pt.trials, pt.failures,
                    int(key in hull_keys), int(key == sel),
                )
            )
        )
    return "\n".join(lines) + "\n"


BOUNDS_COLUMNS = [
    "R",
    "t1_side_lower", "t1_side_upper", "t1_side_ok",
    "t1_central_lower", "t1_central_upper", "t1_central_ok",
    "t2_side_lower", "t2_side_upper", "t2_side_ok",
    "t2_central_lower", "t2_central_upper", "t2_central_ok",
    "gamma_d", "d_sm_side", "violated",
]


def bounds_to_csv(rows: list[BoundsRow]) -> str:
    lines = [",".join(BOUNDS_COLUMNS)]
    for row in rows:
        violated = ";".join(
            sorted(set(row.t1_side.violated + row.t1_central.violated
                       + row.t2_side.violated + row.t2_central.violated))
        )
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    row.rate,
                    row.t1_side.lower, row.t1_side.upper, int(row.t1_side.hypotheses_ok),
                    row.t1_central.lower, row.t1_central.upper, int(row.t1_central.hypotheses_ok),
                    row.t2_side.lower, row.t2_side.upper, int(row.t2_side.hypotheses_ok),
                    row.t2_central.lower, row.t2_central.upper, int(row.t2_central.hypotheses_ok),
                    row.gamma, row.d_sm_side, violated,
                )
            )
        )
    return "\n".join(lines) + "\n"


def write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")
