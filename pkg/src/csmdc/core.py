"""Sparse test signals, seeded Gaussian sensing, and distortion metrics.

Every generator here is a pure function of its integer seed; the toolkit-wide
random engine is numpy's PCG64.  Seeds for the different random streams of an
experiment are derived from a master seed through ``derive_seed`` so that no
global RNG state exists anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMatrixError, DimensionMismatchError, InvalidConfigError

__all__ = [
    "SEED_PURPOSE_SIGNAL",
    "SEED_PURPOSE_MATRIX",
    "SEED_PURPOSE_CHANNEL",
    "SEED_PURPOSE_MDSQ_TRAIN",
    "derive_seed",
    "rng_from_seed",
    "GenConfig",
    "SparseSignal",
    "SensingMatrix",
    "Measurements",
    "gen_sparse_signal",
    "gen_sensing_matrix",
    "sense",
    "coherence",
    "relative_distortion",
]

# Purpose tags keep the per-trial random streams independent of each other.
SEED_PURPOSE_SIGNAL = 1
SEED_PURPOSE_MATRIX = 2
SEED_PURPOSE_CHANNEL = 3
SEED_PURPOSE_MDSQ_TRAIN = 4


def derive_seed(master_seed: int, trial: int, purpose: int) -> int:
    """Derive a 64-bit seed as a pure function of (master, trial, purpose)."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(trial), int(purpose)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rng_from_seed(seed: int) -> np.random.Generator:
    """PCG64 generator for a bare 64-bit seed (the repo-wide engine)."""
    return np.random.default_rng(int(seed))


@dataclass(frozen=True)
class GenConfig:
    """Parameters of a synthetic sparse-signal draw."""

    n: int
    k: int
    sigma_x2: float
    seed: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidConfigError(f"n must be >= 1, got {self.n}")
        if self.k < 0 or self.k > self.n:
            raise InvalidConfigError(f"k must satisfy 0 <= k <= n, got k={self.k}, n={self.n}")
        if not (self.sigma_x2 > 0):
            raise InvalidConfigError(f"sigma_x2 must be positive, got {self.sigma_x2}")


@dataclass(frozen=True, eq=False)
class SparseSignal:
    """A k-sparse vector together with its support; basis fixed to identity."""

    n: int
    k: int
    support: np.ndarray
    theta: np.ndarray
    basis_id: str = "identity"

    def __post_init__(self) -> None:
        self.support.setflags(write=False)
        self.theta.setflags(write=False)


@dataclass(frozen=True, eq=False)
class SensingMatrix:
    """Gaussian sensing matrix; entries fully determined by (m, n, seed)."""

    m: int
    n: int
    seed: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        self.entries.setflags(write=False)


@dataclass(frozen=True, eq=False)
class Measurements:
    """Measurement vector plus the recipe to regenerate its sensing matrix."""

    y: np.ndarray
    matrix_seed: int
    m: int
    n: int

    def __post_init__(self) -> None:
        if self.y.shape != (self.m,):
            raise DimensionMismatchError(f"y has shape {self.y.shape}, expected ({self.m},)")
        self.y.setflags(write=False)


def gen_sparse_signal(cfg: GenConfig) -> SparseSignal:
    """Draw a k-sparse signal: uniform support, i.i.d. Gaussian nonzeros."""
    rng = rng_from_seed(cfg.seed)
    support = np.sort(rng.choice(cfg.n, size=cfg.k, replace=False)).astype(np.int64)
    theta = np.zeros(cfg.n)
    theta[support] = rng.normal(0.0, math.sqrt(cfg.sigma_x2), size=cfg.k)
    return SparseSignal(n=cfg.n, k=cfg.k, support=support, theta=theta)


def gen_sensing_matrix(m: int, n: int, seed: int) -> SensingMatrix:
    """Draw an m-by-n matrix with i.i.d. N(0, 1/m) entries, deterministically."""
    if m < 1 or n < 1:
        raise InvalidConfigError(f"matrix sizes must be >= 1, got m={m}, n={n}")
    rng = rng_from_seed(seed)
    entries = rng.standard_normal((m, n)) / math.sqrt(m)
    return SensingMatrix(m=m, n=n, seed=int(seed), entries=entries)


def sense(phi: SensingMatrix, x: SparseSignal) -> Measurements:
    """Project a signal onto the sensing matrix (identity basis: x = theta)."""
    if phi.n != x.n:
        raise DimensionMismatchError(f"matrix has n={phi.n}, signal has n={x.n}")
    y = phi.entries @ x.theta
    return Measurements(y=y, matrix_seed=phi.seed, m=phi.m, n=phi.n)


def coherence(phi: SensingMatrix) -> float:
    """Maximum absolute normalized inner product over distinct column pairs."""
    if phi.n < 2:
        raise InvalidConfigError("coherence needs at least two columns")
    norms = np.linalg.norm(phi.entries, axis=0)
    if np.any(norms == 0.0):
        raise DegenerateMatrixError("matrix has a zero column")
    gram = np.abs((phi.entries / norms).T @ (phi.entries / norms))
    np.fill_diagonal(gram, 0.0)
    return float(min(gram.max(), 1.0))


def relative_distortion(x: np.ndarray, x_hat: np.ndarray) -> float:
    """Normalized error norm ||x - x_hat||_2 / ||x||_2."""
    x = np.asarray(x, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x.shape != x_hat.shape:
        raise DimensionMismatchError(f"shape mismatch: {x.shape} vs {x_hat.shape}")
    ref = np.linalg.norm(x)
    if ref == 0.0:
        raise ValueError("reference signal has zero norm")
    return float(np.linalg.norm(x - x_hat) / ref)
