"""Experiment configuration and its key-value text format.

Config files are plain ``key = value`` lines; ``#`` starts a comment.  An
``m`` value may be a single integer or an inclusive range ``start:stop:step``.
Example::

    scheme = gq
    n = 256
    k = 10
    m = 50
    sigma_x2 = 1.0
    trials = 100
    master_seed = 42
    B = 6
    b = 2
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .codecs import Scheme
from .errors import InvalidConfigError
from .solvers import SolverOptions

__all__ = ["ExperimentConfig", "load_config", "parse_config_text", "DEFAULT_LLOYD_ITERS"]

DEFAULT_LLOYD_ITERS = 20

_SCHEME_NAMES = {"gq": Scheme.GQ, "split": Scheme.SPLIT, "mdsq": Scheme.MDSQ}


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweepable codec experiment: source, codec, channel, solver."""

    scheme: Scheme
    n: int
    k: int
    m_values: tuple[int, ...]
    sigma_x2: float = 1.0
    trials: int = 100
    master_seed: int = 0
    fine_bits: int = 0   # B for GQ, R for SPLIT, side bits for MDSQ
    coarse_bits: int = 0
    spread: int = 1
    lloyd_iters: int = DEFAULT_LLOYD_ITERS
    p: float | None = None
    kappa: float = 1.0
    solver: SolverOptions = field(default_factory=SolverOptions)
    out: str | None = None

    def __post_init__(self) -> None:
        if self.n < 1 or not (1 <= self.k <= self.n):
            raise InvalidConfigError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if not self.m_values or any(m < 2 for m in self.m_values):
            raise InvalidConfigError("m values must all be >= 2")
        if not (self.sigma_x2 > 0):
            raise InvalidConfigError("sigma_x2 must be positive")
        if self.trials < 1:
            raise InvalidConfigError("trials must be >= 1")
        if self.p is not None and not (0.0 <= self.p <= 1.0):
            raise InvalidConfigError(f"p must be in [0, 1], got {self.p}")
        if not (self.kappa > 0):
            raise InvalidConfigError("kappa must be positive")
        if self.scheme == Scheme.GQ:
            if not (1 <= self.fine_bits <= 16) or not (0 <= self.coarse_bits <= self.fine_bits):
                raise InvalidConfigError("GQ needs 1 <= B <= 16 and 0 <= b <= B")
        elif self.scheme == Scheme.SPLIT:
            if not (1 <= self.fine_bits <= 16) or self.coarse_bits != 0:
                raise InvalidConfigError("SPLIT needs 1 <= R <= 16 and b = 0")
        else:
            if not (1 <= self.fine_bits <= 8):
                raise InvalidConfigError("MDSQ needs 1 <= side_bits <= 8")
            if not (0 <= self.spread < (1 << self.fine_bits)):
                raise InvalidConfigError("MDSQ spread leaves the index matrix")

    def with_scheme(self, scheme: Scheme, fine_bits: int, coarse_bits: int) -> "ExperimentConfig":
        """Sibling config for another rate split; seeds and source unchanged."""
        return replace(self, scheme=scheme, fine_bits=fine_bits, coarse_bits=coarse_bits)


def _parse_m(text: str) -> tuple[int, ...]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InvalidConfigError(f"m range must be start:stop:step, got {text!r}")
        start, stop, step = (int(p) for p in parts)
        if step < 1 or stop < start:
            raise InvalidConfigError(f"bad m range {text!r}")
        return tuple(range(start, stop + 1, step))
    return (int(text),)


_INT_KEYS = {"n", "k", "trials", "master_seed", "B", "b", "R", "side_bits", "spread",
             "lloyd_iters", "max_iters"}
_FLOAT_KEYS = {"sigma_x2", "p", "kappa", "abs_tol", "rel_tol", "rho", "penalty",
               "feasibility_slack"}


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse the documented key-value format into an ExperimentConfig."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise InvalidConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key in raw:
            raise InvalidConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value

    values: dict[str, object] = {}
    for key, value in raw.items():
        try:
            if key == "scheme":
                if value.lower() not in _SCHEME_NAMES:
                    raise InvalidConfigError(f"unknown scheme {value!r}")
                values[key] = _SCHEME_NAMES[value.lower()]
            elif key == "m":
                values[key] = _parse_m(value)
            elif key == "out":
                values[key] = value
            elif key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            else:
                raise InvalidConfigError(f"unknown config key {key!r}")
        except ValueError as exc:
            if isinstance(exc, InvalidConfigError):
                raise
            raise InvalidConfigError(f"bad value for {key!r}: {value!r}") from None

    for required in ("scheme", "n", "k", "m"):
        if required not in values:
            raise InvalidConfigError(f"missing required key {required!r}")

    scheme = values["scheme"]
    if scheme == Scheme.GQ:
        if "B" not in values:
            raise InvalidConfigError("GQ config needs B")
        fine, coarse = values["B"], values.get("b", 0)
    elif scheme == Scheme.SPLIT:
        if "R" not in values:
            raise InvalidConfigError("SPLIT config needs R")
        fine, coarse = values["R"], 0
    else:
        if "R" not in values and "side_bits" not in values:
            raise InvalidConfigError("MDSQ config needs side_bits (or R)")
        fine, coarse = values.get("side_bits", values.get("R")), 0

    solver_kwargs = {
        k: values[k]
        for k in ("max_iters", "abs_tol", "rel_tol", "rho", "penalty", "feasibility_slack")
        if k in values
    }
    return ExperimentConfig(
        scheme=scheme,
        n=values["n"],
        k=values["k"],
        m_values=values["m"],
        sigma_x2=values.get("sigma_x2", 1.0),
        trials=values.get("trials", 100),
        master_seed=values.get("master_seed", 0),
        fine_bits=fine,
        coarse_bits=coarse,
        spread=values.get("spread", 1),
        lloyd_iters=values.get("lloyd_iters", DEFAULT_LLOYD_ITERS),
        p=values.get("p"),
        kappa=values.get("kappa", 1.0),
        solver=SolverOptions(**solver_kwargs),
        out=values.get("out"),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))
