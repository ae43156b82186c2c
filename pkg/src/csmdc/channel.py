"""Memoryless description-loss channel and redundancy selection.

A pair of descriptions crosses a channel that drops each one independently
with probability p.  The expected end-to-end distortion of a configuration is

    D_avg = 2 * D_side * p * (1 - p) + D_cent * (1 - p)^2 + p^2

with distortions measured as squared relative error, so that losing both
descriptions (zero reconstruction) contributes exactly 1.  Sweeping the
fine/coarse rate split at a fixed total rate traces a (D_side, D_cent)
trade-off curve; the optimizer picks the point on its lower-left convex hull
that minimizes D_avg, which on a discrete set is exactly the tangency rule of
slope -2p/(1-p).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codecs import Description, Scheme
from .core import SEED_PURPOSE_CHANNEL, derive_seed, rng_from_seed
from .errors import InvalidConfigError

__all__ = [
    "LossModel",
    "TradeoffPoint",
    "transmit",
    "avg_distortion",
    "lower_left_hull",
    "optimal_operating_point",
    "tradeoff_curve",
]


@dataclass(frozen=True)
class LossModel:
    """Per-description loss probability and the seed of the loss stream."""

    p: float
    seed: int

    def __post_init__(self) -> None:
        if not (0.0 <= self.p <= 1.0):
            raise InvalidConfigError(f"loss probability must be in [0, 1], got {self.p}")


@dataclass(frozen=True)
class TradeoffPoint:
    """Monte Carlo distortion estimate for one codec configuration."""

    scheme: Scheme
    fine_bits: int
    coarse_bits: int
    spread: int
    d_side: float
    d_central: float
    trials: int
    failures: int = 0


def transmit(
    pair: tuple[Description, Description], model: LossModel, trial: int
) -> tuple[tuple[Description, ...], tuple[bool, bool]]:
    """Drop each description independently; deterministic given (seed, trial)."""
    rng = rng_from_seed(derive_seed(model.seed, trial, SEED_PURPOSE_CHANNEL))
    kept = rng.random(2) >= model.p
    received = tuple(d for d, keep in zip(pair, kept) if keep)
    return received, (bool(kept[0]), bool(kept[1]))


def avg_distortion(d_side: float, d_central: float, p: float) -> float:
    """Expected distortion over the four loss events of a description pair."""
    if d_side < 0 or d_central < 0:
        raise InvalidConfigError("distortions must be nonnegative")
    if not (0.0 <= p <= 1.0):
        raise InvalidConfigError(f"loss probability must be in [0, 1], got {p}")
    return 2.0 * d_side * p * (1.0 - p) + d_central * (1.0 - p) ** 2 + p * p


def lower_left_hull(points: list[TradeoffPoint]) -> list[TradeoffPoint]:
    """Lower-left convex hull in the (d_side, d_central) plane.

    Returns the achievable frontier sorted by d_side ascending: dominated
    points are removed, collinear hull points are retained.
    """
    if not points:
        raise InvalidConfigError("need at least one point")
    seen: dict[tuple[float, float], TradeoffPoint] = {}
    for pt in points:
        seen.setdefault((pt.d_side, pt.d_central), pt)
    ordered = sorted(seen.values(), key=lambda q: (q.d_side, q.d_central))

    def cross(o: TradeoffPoint, a: TradeoffPoint, b: TradeoffPoint) -> float:
        return (a.d_side - o.d_side) * (b.d_central - o.d_central) - (
            a.d_central - o.d_central
        ) * (b.d_side - o.d_side)

    chain: list[TradeoffPoint] = []
    for pt in ordered:
        while len(chain) >= 2 and cross(chain[-2], chain[-1], pt) < 0:
            chain.pop()
        chain.append(pt)
    # beyond the global minimum of d_central the frontier is dominated
    stop = min(range(len(chain)), key=lambda i: chain[i].d_central)
    return chain[: stop + 1]


def optimal_operating_point(hull: list[TradeoffPoint], p: float) -> TradeoffPoint:
    """Hull point minimizing D_avg at loss rate p; ties favour lower d_central."""
    if not hull:
        raise InvalidConfigError("empty hull")
    if not (0.0 <= p < 1.0):
        raise InvalidConfigError(f"loss probability must be in [0, 1), got {p}")
    return min(
        hull,
        key=lambda q: (avg_distortion(q.d_side, q.d_central, p), q.d_central, q.d_side),
    )


def tradeoff_curve(base, rate: int) -> list[TradeoffPoint]:
    """One Monte Carlo point per rate split (B, b) with B + b = rate, B >= b.

    The b = 0 end is the pure splitting scheme.  All configurations share the
    same per-trial seeds (common random numbers).  Configurations whose every
    trial failed are flagged through ``failures`` and dropped by the caller.
    """
    if rate < 2:
        raise InvalidConfigError(f"total rate must be >= 2, got {rate}")
    from . import pipeline  # deferred: pipeline sits above the codec layer

    points = []
    for fine in range(rate, (rate + 1) // 2 - 1, -1):
        coarse = rate - fine
        if coarse > fine:
            continue
        cfg = base.with_scheme(
            scheme=Scheme.SPLIT if coarse == 0 else Scheme.GQ,
            fine_bits=fine if coarse else rate,
            coarse_bits=coarse,
        )
        est = pipeline.estimate_distortions(cfg)
        points.append(
            TradeoffPoint(
                scheme=cfg.scheme,
                fine_bits=fine,
                coarse_bits=coarse,
                spread=0,
                d_side=est.d_side,
                d_central=est.d_central,
                trials=est.trials,
                failures=est.failures,
            )
        )
    return points
