"""Rate-distortion bound calculator for the splitting and MDSQ codecs.

The bounds are evaluated exactly as printed, with hypothesis checks exposed
separately: ``m > 60 log n``, the coherence condition ``k < (1/mu + 1) / 4``,
and positivity of each bound's denominator.  The logarithm base is a named
module constant (natural log by default) so its effect can be probed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigError
from .quantizers import MdsqCodebook, QuantizerSpec, dequantize, mdsq_mse, quantize

__all__ = [
    "DEFAULT_LOG_BASE",
    "BoundInputs",
    "BoundReport",
    "HypothesisCheck",
    "thm1_side",
    "thm1_central",
    "thm2_side",
    "thm2_central",
    "gamma_d",
    "estimate_d_sm_side",
    "check_hypotheses",
]

DEFAULT_LOG_BASE = math.e

CHECK_MEASUREMENT_COUNT = "m_gt_60_log_n"
CHECK_COHERENCE = "k_lt_quarter_inv_mu_plus_1"
CHECK_DENOMINATOR = "denominator_positive"
CHECK_DENOMINATOR_30 = "denominator_positive_factor30"
CHECK_DENOMINATOR_15 = "denominator_positive_factor15"
CHECK_GAMMA_DEFINED = "gamma_d_defined"


@dataclass(frozen=True)
class BoundInputs:
    """Problem parameters the bounds are evaluated at."""

    n: int
    m: int
    k: int
    sigma_x2: float
    rate: int
    mu: float | None = None
    d_sm_side: float | None = None

    def __post_init__(self) -> None:
        if self.n < 2 or self.m < 1 or self.k < 1:
            raise InvalidConfigError("need n >= 2, m >= 1, k >= 1")
        if not (self.sigma_x2 > 0):
            raise InvalidConfigError("sigma_x2 must be positive")
        if self.rate < 1:
            raise InvalidConfigError("rate must be >= 1")
        if self.mu is not None and not (0.0 <= self.mu <= 1.0):
            raise InvalidConfigError("coherence must be in [0, 1]")


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    margin: float


@dataclass(frozen=True)
class BoundReport:
    lower: float
    upper: float
    hypotheses_ok: bool
    violated: tuple[str, ...]


def _log(x: float, base: float) -> float:
    return math.log(x) / math.log(base)


def _denominator(inputs: BoundInputs, factor: float, log_base: float) -> float:
    return 1.0 - math.sqrt(factor * _log(inputs.n, log_base) / inputs.m) * (4 * inputs.k - 1)


def _theorem_report(
    inputs: BoundInputs, factor: float, rate_exp: float, gamma: float | None, log_base: float
) -> BoundReport:
    violated = [c.name for c in _base_checks(inputs, log_base) if not c.passed]
    scale = 2.0 ** (-rate_exp * inputs.rate)
    if gamma is None:
        gamma_factor = 1.0
    else:
        gamma_factor = gamma
    lower = (inputs.k**2 / inputs.m) * inputs.sigma_x2 * scale * gamma_factor
    denom = _denominator(inputs, factor, log_base)
    if denom > 0:
        upper = 4.0 * inputs.k * inputs.sigma_x2 * scale * gamma_factor / denom
    else:
        upper = math.inf
        violated.append(CHECK_DENOMINATOR)
    return BoundReport(
        lower=lower,
        upper=upper,
        hypotheses_ok=not violated,
        violated=tuple(dict.fromkeys(violated)),
    )


def thm1_side(inputs: BoundInputs, log_base: float = DEFAULT_LOG_BASE) -> BoundReport:
    """Side-decoder distortion bounds of the splitting codec (factor 30)."""
    return _theorem_report(inputs, factor=30.0, rate_exp=2.0, gamma=None, log_base=log_base)


def thm1_central(inputs: BoundInputs, log_base: float = DEFAULT_LOG_BASE) -> BoundReport:
    """Central-decoder distortion bounds of the splitting codec (factor 15)."""
    return _theorem_report(inputs, factor=15.0, rate_exp=2.0, gamma=None, log_base=log_base)


def thm2_side(inputs: BoundInputs, log_base: float = DEFAULT_LOG_BASE) -> BoundReport:
    """Side-decoder distortion bounds of the MDSQ codec."""
    return _theorem_report(inputs, factor=15.0, rate_exp=2.0, gamma=None, log_base=log_base)


def thm2_central(inputs: BoundInputs, log_base: float = DEFAULT_LOG_BASE) -> BoundReport:
    """Central-decoder bounds of the MDSQ codec, scaled by 2^(-4R) * gamma_D."""
    if inputs.d_sm_side is None:
        raise InvalidConfigError("thm2_central needs d_sm_side")
    gamma = gamma_d(inputs.d_sm_side, inputs.sigma_x2, inputs.m, inputs.k, inputs.rate)
    if gamma is None:
        violated = [c.name for c in _base_checks(inputs, log_base) if not c.passed]
        violated.append(CHECK_GAMMA_DEFINED)
        return BoundReport(
            lower=math.nan,
            upper=math.nan,
            hypotheses_ok=False,
            violated=tuple(dict.fromkeys(violated)),
        )
    return _theorem_report(inputs, factor=15.0, rate_exp=4.0, gamma=gamma, log_base=log_base)


def gamma_d(d_sm_side: float, sigma_x2: float, m: int, k: int, rate: int) -> float | None:
    """Central/side coupling factor of the two-channel quantizer bound.

    Returns None when the expression is undefined (negative radicand or
    non-positive bracket).  Wherever defined the value is >= 1.
    """
    if not (d_sm_side > 0 and sigma_x2 > 0 and m >= 1 and k >= 1 and rate >= 1):
        raise InvalidConfigError("gamma_d inputs must be positive")
    d_tilde = d_sm_side / ((sigma_x2 / m) * k)
    radicand = d_tilde * d_tilde - 2.0 ** (-4 * rate)
    if radicand < 0:
        return None
    bracket = 1.0 - ((1.0 - d_tilde) - math.sqrt(radicand)) ** 2
    if bracket <= 0:
        return None
    return 1.0 / bracket


def estimate_d_sm_side(
    quantizer: QuantizerSpec | MdsqCodebook, samples: np.ndarray
) -> float:
    """Empirical per-sample MSE of the side quantizer over `samples`.

    For a uniform spec this is the plain quantize/dequantize error; for an
    MDSQ codebook it is the average over the two side decoders.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise InvalidConfigError("empty sample set")
    if isinstance(quantizer, MdsqCodebook):
        _, side1, side2 = mdsq_mse(quantizer, samples)
        return 0.5 * (side1 + side2)
    recon = dequantize(quantizer, quantize(quantizer, samples))
    return float(np.mean((samples - recon) ** 2))


def _base_checks(inputs: BoundInputs, log_base: float) -> list[HypothesisCheck]:
    threshold = 60.0 * _log(inputs.n, log_base)
    checks = [
        HypothesisCheck(
            name=CHECK_MEASUREMENT_COUNT,
            passed=inputs.m > threshold,
            margin=inputs.m - threshold,
        )
    ]
    if inputs.mu is not None:
        limit = math.inf if inputs.mu == 0 else 0.25 * (1.0 / inputs.mu + 1.0)
        checks.append(
            HypothesisCheck(
                name=CHECK_COHERENCE,
                passed=inputs.k < limit,
                margin=limit - inputs.k,
            )
        )
    return checks


def check_hypotheses(
    inputs: BoundInputs, log_base: float = DEFAULT_LOG_BASE
) -> list[HypothesisCheck]:
    """Evaluate the theorem hypotheses with their numeric margins.

    Includes the measurement-count condition, the coherence condition when mu
    is supplied, and positivity of both bound denominators.
    """
    checks = _base_checks(inputs, log_base)
    for name, factor in ((CHECK_DENOMINATOR_30, 30.0), (CHECK_DENOMINATOR_15, 15.0)):
        denom = _denominator(inputs, factor, log_base)
        checks.append(HypothesisCheck(name=name, passed=denom > 0, margin=denom))
    return checks
