"""End-to-end trial machinery: generate, sense, encode, transmit, decode.

This layer wires the codec, solver, and channel pieces into reproducible
Monte Carlo trials.  Trial t of a sweep derives all of its randomness from
``(master_seed, t, purpose)`` so that configurations sharing a master seed
see identical signals, matrices, and loss patterns (common random numbers).

MDSQ codebooks are not carried inside packets; both ends rebuild them from
the description header (scale, side bits, matrix seed) plus the codec
parameters (spread, Lloyd rounds) through a fixed training protocol:
``TRAIN_SAMPLE_COUNT`` Gaussian samples with standard deviation
``scale * TRAIN_SIGMA_FRACTION``, seeded from the matrix seed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .codecs import (
    DecoderInput,
    Description,
    Scheme,
    gq_central_merge,
    gq_encode,
    gq_side_extract,
    mdsq_encode_vec,
    split_encode,
    unpack_payload,
)
from .config import ExperimentConfig
from .core import (
    SEED_PURPOSE_MATRIX,
    SEED_PURPOSE_MDSQ_TRAIN,
    SEED_PURPOSE_SIGNAL,
    GenConfig,
    Measurements,
    SensingMatrix,
    derive_seed,
    gen_sensing_matrix,
    gen_sparse_signal,
    relative_distortion,
    rng_from_seed,
    sense,
)
from .channel import LossModel, transmit
from .errors import InvalidConfigError
from .quantizers import MdsqCodebook, mdsq_design, mdsq_mse
from .solvers import (
    BpdnProblem,
    GqSideProblem,
    SideGroup,
    SolverOptions,
    SolverResult,
    bpdn,
    default_epsilon,
    gq_side_solve,
)

__all__ = [
    "TRAIN_SAMPLE_COUNT",
    "TRAIN_SIGMA_FRACTION",
    "CASE_SIDE1",
    "CASE_SIDE2",
    "CASE_CENTRAL",
    "CASE_LOST",
    "MdsqContext",
    "CaseOutcome",
    "DistortionEstimate",
    "nominal_scale",
    "mdsq_context_for",
    "encode_pair",
    "reconstruct_side",
    "reconstruct_central",
    "run_trial",
    "estimate_distortions",
]

TRAIN_SAMPLE_COUNT = 8192
TRAIN_SIGMA_FRACTION = 0.25

CASE_SIDE1 = "side1"
CASE_SIDE2 = "side2"
CASE_CENTRAL = "central"
CASE_LOST = "lost-all"


@dataclass(frozen=True, eq=False)
class MdsqContext:
    """Codebook plus its empirical per-sample MSEs on the training set."""

    codebook: MdsqCodebook
    mse_central: float
    mse_side_1: float
    mse_side_2: float


@dataclass(frozen=True)
class CaseOutcome:
    """One decode attempt inside a trial."""

    case: str
    mask: str
    rd: float
    rd_sq: float
    iterations: int
    status: str
    wall_ms: float


@dataclass(frozen=True)
class DistortionEstimate:
    """Monte Carlo means of squared relative distortion for one config."""

    d_side: float
    d_central: float
    trials: int
    failures: int


def nominal_scale(cfg: ExperimentConfig, m: int) -> float:
    """MDSQ codebook half-range: four nominal measurement std deviations."""
    sigma_y = math.sqrt(cfg.k * cfg.sigma_x2 / m)
    return float(np.float32(4.0 * sigma_y))


def _training_samples(scale: float, matrix_seed: int) -> np.ndarray:
    train_seed = derive_seed(matrix_seed, 0, SEED_PURPOSE_MDSQ_TRAIN)
    return rng_from_seed(train_seed).normal(
        0.0, scale * TRAIN_SIGMA_FRACTION, TRAIN_SAMPLE_COUNT
    )


def mdsq_context_for(
    scale: float, side_bits: int, spread: int, lloyd_iters: int, matrix_seed: int
) -> MdsqContext:
    """Rebuild the deterministic codebook both codec ends agree on."""
    samples = _training_samples(scale, matrix_seed)
    cb = mdsq_design(side_bits, spread, scale, lloyd_iters=lloyd_iters, samples=samples)
    central, side1, side2 = mdsq_mse(cb, samples)
    return MdsqContext(codebook=cb, mse_central=central, mse_side_1=side1, mse_side_2=side2)


def context_from_codebook(cb: MdsqCodebook, matrix_seed: int) -> MdsqContext:
    """Wrap a deserialized codebook, estimating its MSEs on the standard draw."""
    samples = _training_samples(cb.scale, matrix_seed)
    central, side1, side2 = mdsq_mse(cb, samples)
    return MdsqContext(codebook=cb, mse_central=central, mse_side_1=side1, mse_side_2=side2)


def encode_pair(
    cfg: ExperimentConfig, y: Measurements
) -> tuple[Description, Description, MdsqContext | None]:
    """Encode a measurement vector under the configured scheme."""
    if cfg.scheme == Scheme.GQ:
        d1, d2 = gq_encode(y, cfg.fine_bits, cfg.coarse_bits)
        return d1, d2, None
    if cfg.scheme == Scheme.SPLIT:
        d1, d2 = split_encode(y, cfg.fine_bits)
        return d1, d2, None
    ctx = mdsq_context_for(
        nominal_scale(cfg, y.m), cfg.fine_bits, cfg.spread, cfg.lloyd_iters, y.matrix_seed
    )
    d1, d2 = mdsq_encode_vec(y, ctx.codebook)
    return d1, d2, ctx


def _side_problem(dec: DecoderInput, phi: SensingMatrix, kappa: float) -> GqSideProblem:
    groups = []
    for g in dec.groups:
        groups.append(
            SideGroup(
                A=phi.entries[g.indices],
                y=g.values,
                epsilon=default_epsilon(g.delta, len(g.values), kappa),
                delta=g.delta,
            )
        )
    g1 = groups[0] if groups else None
    g2 = groups[1] if len(groups) > 1 else None
    return GqSideProblem(group1=g1, group2=g2)


def reconstruct_side(
    d: Description,
    phi: SensingMatrix,
    kappa: float = 1.0,
    opts: SolverOptions | None = None,
    mdsq: MdsqContext | None = None,
) -> SolverResult:
    """Decode a single description.

    GQ descriptions use the split-constraint side solver (per-group misfit
    balls and quantization-consistency boxes); split descriptions use plain
    basis pursuit on their half of the rows; MDSQ descriptions use basis
    pursuit on the side reconstruction values with an epsilon calibrated to
    the codebook's empirical side MSE.
    """
    opts = opts or SolverOptions()
    if d.scheme == Scheme.MDSQ:
        if mdsq is None:
            raise InvalidConfigError("MDSQ decoding needs the codebook context")
        idx = unpack_payload(d)
        table = (
            mdsq.codebook.side_reproductions_1
            if d.desc_id == 1
            else mdsq.codebook.side_reproductions_2
        )
        mse = mdsq.mse_side_1 if d.desc_id == 1 else mdsq.mse_side_2
        eps = kappa * math.sqrt(d.m * mse)
        return bpdn(BpdnProblem(A=phi.entries, y=table[idx], epsilon=eps), opts)
    dec = gq_side_extract(d)
    if d.scheme == Scheme.SPLIT:
        g = dec.groups[0]
        eps = default_epsilon(g.delta, len(g.values), kappa)
        return bpdn(BpdnProblem(A=phi.entries[g.indices], y=g.values, epsilon=eps), opts)
    return gq_side_solve(_side_problem(dec, phi, kappa), opts)


def reconstruct_central(
    d1: Description,
    d2: Description,
    phi: SensingMatrix,
    kappa: float = 1.0,
    opts: SolverOptions | None = None,
    mdsq: MdsqContext | None = None,
) -> SolverResult:
    """Decode a full pair: keep the finer copy of every measurement, run BPDN."""
    opts = opts or SolverOptions()
    if d1.scheme == Scheme.MDSQ:
        if mdsq is None:
            raise InvalidConfigError("MDSQ decoding needs the codebook context")
        a, b = (d1, d2) if d1.desc_id == 1 else (d2, d1)
        i_idx = unpack_payload(a)
        j_idx = unpack_payload(b)
        inverse = mdsq.codebook.ia_inverse
        cells = np.array([inverse[(int(i), int(j))] for i, j in zip(i_idx, j_idx)])
        values = mdsq.codebook.central_reproductions[cells]
        eps = kappa * math.sqrt(a.m * mdsq.mse_central)
        return bpdn(BpdnProblem(A=phi.entries, y=values, epsilon=eps), opts)
    dec = gq_central_merge(d1, d2)
    g = dec.groups[0]
    eps = default_epsilon(g.delta, len(g.values), kappa)
    return bpdn(BpdnProblem(A=phi.entries, y=g.values, epsilon=eps), opts)


def _outcome(case: str, mask: str, x, result: SolverResult | None, started: float) -> CaseOutcome:
    wall_ms = (time.perf_counter() - started) * 1e3
    if result is None:
        return CaseOutcome(case=case, mask=mask, rd=1.0, rd_sq=1.0, iterations=0,
                           status="lost", wall_ms=wall_ms)
    rd = relative_distortion(x.theta, result.theta_hat)
    return CaseOutcome(
        case=case,
        mask=mask,
        rd=rd,
        rd_sq=rd * rd,
        iterations=result.iterations,
        status=result.status + ("+dropped_boxes" if result.dropped_boxes else ""),
        wall_ms=wall_ms,
    )


def run_trial(cfg: ExperimentConfig, m: int, trial: int) -> list[CaseOutcome]:
    """Run one seeded trial at measurement count m.

    Without a channel (cfg.p is None) the three decoder cases side1, side2,
    central are each evaluated once.  With a channel, only the case realized
    by the loss draw is evaluated (both lost means unit distortion).
    """
    x = gen_sparse_signal(
        GenConfig(n=cfg.n, k=cfg.k, sigma_x2=cfg.sigma_x2,
                  seed=derive_seed(cfg.master_seed, trial, SEED_PURPOSE_SIGNAL))
    )
    phi = gen_sensing_matrix(m, cfg.n, derive_seed(cfg.master_seed, trial, SEED_PURPOSE_MATRIX))
    y = sense(phi, x)
    d1, d2, mdsq = encode_pair(cfg, y)
    opts = cfg.solver

    def side(d: Description, case: str, mask: str) -> CaseOutcome:
        started = time.perf_counter()
        return _outcome(case, mask, x, reconstruct_side(d, phi, cfg.kappa, opts, mdsq), started)

    def central(mask: str) -> CaseOutcome:
        started = time.perf_counter()
        return _outcome(
            CASE_CENTRAL, mask, x, reconstruct_central(d1, d2, phi, cfg.kappa, opts, mdsq), started
        )

    if cfg.p is None:
        return [side(d1, CASE_SIDE1, "-"), side(d2, CASE_SIDE2, "-"), central("-")]

    _, kept = transmit((d1, d2), LossModel(p=cfg.p, seed=cfg.master_seed), trial)
    mask = f"{int(kept[0])}{int(kept[1])}"
    if all(kept):
        return [central(mask)]
    if kept[0]:
        return [side(d1, CASE_SIDE1, mask)]
    if kept[1]:
        return [side(d2, CASE_SIDE2, mask)]
    return [_outcome(CASE_LOST, mask, x, None, time.perf_counter())]


def estimate_distortions(cfg: ExperimentConfig) -> DistortionEstimate:
    """Mean squared relative distortions over cfg.trials seeded trials.

    Runs the three no-channel decoder cases per trial; d_side averages both
    side decoders.  Trials whose solve produced a non-finite distortion are
    counted in ``failures`` and excluded from the means.
    """
    if len(cfg.m_values) != 1:
        raise InvalidConfigError("distortion estimation expects a single m")
    if cfg.p is not None:
        cfg = replace(cfg, p=None)
    m = cfg.m_values[0]
    side_sq: list[float] = []
    central_sq: list[float] = []
    failures = 0
    for trial in range(cfg.trials):
        for out in run_trial(cfg, m, trial):
            if not math.isfinite(out.rd_sq):
                failures += 1
                continue
            if out.case == CASE_CENTRAL:
                central_sq.append(out.rd_sq)
            else:
                side_sq.append(out.rd_sq)
    if not side_sq or not central_sq:
        return DistortionEstimate(d_side=math.inf, d_central=math.inf, trials=0,
                                  failures=failures)
    return DistortionEstimate(
        d_side=float(np.mean(side_sq)),
        d_central=float(np.mean(central_sq)),
        trials=cfg.trials,
        failures=failures,
    )
