"""Versioned binary files for signal/measurement instances.

The ``gen`` CLI command stores a sparse signal together with its measurements
as a compressed npz with an explicit format version, so decoders can check
compatibility before trusting the arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Measurements, SparseSignal
from .errors import MalformedHeaderError

__all__ = ["Instance", "save_instance", "load_instance"]

INSTANCE_VERSION = 1


@dataclass(frozen=True, eq=False)
class Instance:
    """A generated ground-truth signal and its sensed measurements."""

    signal: SparseSignal
    measurements: Measurements
    sigma_x2: float
    signal_seed: int


def save_instance(path: str | Path, inst: Instance) -> None:
    np.savez_compressed(
        Path(path),
        version=np.int64(INSTANCE_VERSION),
        n=np.int64(inst.signal.n),
        k=np.int64(inst.signal.k),
        m=np.int64(inst.measurements.m),
        sigma_x2=np.float64(inst.sigma_x2),
        signal_seed=np.uint64(inst.signal_seed),
        matrix_seed=np.uint64(inst.measurements.matrix_seed),
        support=inst.signal.support,
        theta=inst.signal.theta,
        y=inst.measurements.y,
    )


def load_instance(path: str | Path) -> Instance:
    with np.load(Path(path)) as data:
        if "version" not in data or int(data["version"]) != INSTANCE_VERSION:
            raise MalformedHeaderError(f"unsupported instance file version in {path}")
        n = int(data["n"])
        k = int(data["k"])
        m = int(data["m"])
        signal = SparseSignal(
            n=n, k=k, support=data["support"].copy(), theta=data["theta"].copy()
        )
        measurements = Measurements(
            y=data["y"].copy(), matrix_seed=int(data["matrix_seed"]), m=m, n=n
        )
        return Instance(
            signal=signal,
            measurements=measurements,
            sigma_x2=float(data["sigma_x2"]),
            signal_seed=int(data["signal_seed"]),
        )
