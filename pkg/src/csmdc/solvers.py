"""Convex recovery by operator splitting.

Two problems are solved here, both minimizing the l1 norm of the coefficient
vector over an intersection of convex sets with closed-form projections:

* ``bpdn``:    min ||theta||_1  s.t.  ||y - A theta||_2 <= eps
* ``gq_side_solve``:  the graded-quantization side decoder, which splits the
  received measurements into a fine and a coarse group and enforces, per
  group, an l2 misfit ball *and* an l-infinity quantization-consistency box
  of half-width delta/2 around the dequantized values.

The algorithm is consensus ADMM: stack the identity (for the l1 prox) and one
copy of the measurement operator per constraint, alternate a regularized
least-squares step with soft-thresholding / ball / box projections, and update
scaled duals.  The Gram matrix I + sum A_c^T A_c is formed and inverted once;
its spectrum is bounded below by 1, so the plain inverse is stable.

Every solve is deterministic.  On a tolerance stop the final iterate is
returned.  When the iteration budget runs out first, the best iterate seen is
returned instead: the lowest-l1 point that satisfied every constraint within
the slack, falling back to the least-infeasible point when none did.  The
logged merit ``||theta||_1 + penalty * sum(constraint violations)`` records
the best-so-far quality and is therefore non-increasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfigError, SolverInputError

__all__ = [
    "SolverOptions",
    "BpdnProblem",
    "SideGroup",
    "GqSideProblem",
    "SolverResult",
    "bpdn",
    "gq_side_solve",
    "default_epsilon",
]

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERS = "max_iters"
STATUS_INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SolverOptions:
    """Iteration budget, tolerances, and merit/feasibility parameters.

    ``rho`` is the ADMM step parameter; ``penalty`` weighs constraint
    violations in the merit used to pick the returned iterate.  A constraint
    with bound ``c`` counts as satisfied when its residual is below
    ``c * (1 + feasibility_slack) + feasibility_slack * max(1, ||y||)``.
    """

    max_iters: int = 5000
    abs_tol: float = 1e-6
    rel_tol: float = 1e-4
    rho: float = 1.0
    penalty: float = 10.0
    feasibility_slack: float = 1e-3
    log_merit: bool = True

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise InvalidConfigError("max_iters must be >= 1")
        if self.abs_tol <= 0 or self.rel_tol <= 0 or self.rho <= 0 or self.penalty <= 0:
            raise InvalidConfigError("tolerances, rho and penalty must be positive")


@dataclass(frozen=True, eq=False)
class BpdnProblem:
    A: np.ndarray
    y: np.ndarray
    epsilon: float

    def __post_init__(self) -> None:
        if self.A.ndim != 2 or self.A.shape[0] != self.y.shape[0]:
            raise SolverInputError("A rows must match len(y)")
        if self.epsilon < 0:
            raise SolverInputError("epsilon must be nonnegative")


@dataclass(frozen=True, eq=False)
class SideGroup:
    """One quantization group of a side description."""

    A: np.ndarray
    y: np.ndarray
    epsilon: float
    delta: float

    def __post_init__(self) -> None:
        if self.A.ndim != 2 or self.A.shape[0] != self.y.shape[0]:
            raise SolverInputError("A rows must match len(y)")
        if self.epsilon < 0 or not self.delta > 0:
            raise SolverInputError("need epsilon >= 0 and delta > 0")


@dataclass(frozen=True, eq=False)
class GqSideProblem:
    group1: SideGroup | None
    group2: SideGroup | None

    def __post_init__(self) -> None:
        if self.group1 is None and self.group2 is None:
            raise SolverInputError("at least one group must be present")

    @property
    def groups(self) -> tuple[SideGroup, ...]:
        return tuple(g for g in (self.group1, self.group2) if g is not None and g.A.shape[0] > 0)


@dataclass(eq=False)
class SolverResult:
    theta_hat: np.ndarray
    iterations: int
    converged: bool
    constraint_residuals: np.ndarray
    status: str
    dropped_boxes: bool = False
    merit_history: np.ndarray | None = field(default=None, repr=False)


class _Constraint:
    """A ball or box around `center` on the image A @ theta."""

    __slots__ = ("kind", "center", "bound", "block")

    def __init__(self, kind: str, center: np.ndarray, bound: float, block: int):
        self.kind = kind
        self.center = center
        self.bound = bound
        self.block = block  # index of the shared linear operator

    def project(self, v: np.ndarray) -> np.ndarray:
        if self.kind == "ball":
            d = v - self.center
            nd = math.sqrt(float(d @ d))
            if nd <= self.bound:
                return v
            if nd == 0.0:
                return self.center.copy()
            return self.center + d * (self.bound / nd)
        return np.clip(v, self.center - self.bound, self.center + self.bound)

    def residual(self, img: np.ndarray) -> float:
        d = img - self.center
        if self.kind == "ball":
            return float(np.linalg.norm(d))
        return float(np.max(np.abs(d))) if d.size else 0.0

    def violation(self, img: np.ndarray) -> float:
        return max(0.0, self.residual(img) - self.bound)

    def feas_tol(self, slack: float) -> float:
        scale = max(1.0, float(np.linalg.norm(self.center)))
        return self.bound * (1.0 + slack) + slack * scale


def _validate_finite(*arrays: np.ndarray) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise SolverInputError("inputs must be finite (no NaN/Inf)")


def _admm(
    blocks: list[np.ndarray],
    constraints: list[_Constraint],
    n: int,
    opts: SolverOptions,
) -> SolverResult:
    for A in blocks:
        _validate_finite(A)
    for c in constraints:
        _validate_finite(c.center)
        if c.bound < 0:
            raise SolverInputError("constraint bounds must be >= 0")

    rho = opts.rho
    copies = [0] * len(blocks)
    for c in constraints:
        copies[c.block] += 1
    gram = np.eye(n)
    for cnt, A in zip(copies, blocks):
        if cnt:
            gram += cnt * (A.T @ A)
    # one inverse up front; spectrum >= 1 keeps this well-conditioned
    gram_inv = np.linalg.inv(gram)
    trans = [A.T for A in blocks]

    theta = np.zeros(n)
    w = np.zeros(n)
    u_w = np.zeros(n)
    z = [c.center.copy() for c in constraints]
    u = [np.zeros_like(c.center) for c in constraints]

    feas_tols = [c.feas_tol(opts.feasibility_slack) for c in constraints]
    best_merit = math.inf
    best_viol = math.inf
    best_viol_theta = theta.copy()
    best_feasible_l1 = math.inf
    best_feasible_theta: np.ndarray | None = None
    merit_log: list[float] = []
    total_dim = n + sum(c.center.size for c in constraints)
    problem_scale = max(1.0, max(float(np.linalg.norm(c.center)) for c in constraints))
    mid_best_viol = math.inf
    midpoint = max(1, opts.max_iters // 2)
    converged = False
    it = 0

    for it in range(1, opts.max_iters + 1):
        rhs = w - u_w
        for c, zc, uc in zip(constraints, z, u):
            rhs += trans[c.block] @ (zc - uc)
        theta = gram_inv @ rhs

        imgs = [A @ theta for A in blocks]

        w_new = theta + u_w
        thr = 1.0 / rho
        w_new = np.sign(w_new) * np.maximum(np.abs(w_new) - thr, 0.0)
        z_new = [c.project(imgs[c.block] + uc) for c, uc in zip(constraints, u)]

        dual_step = (w_new - w).copy()
        for c, zn, zo in zip(constraints, z_new, z):
            dual_step += trans[c.block] @ (zn - zo)
        s_dual = rho * float(np.linalg.norm(dual_step))

        w = w_new
        z = z_new
        u_w += theta - w
        pri_sq = float((theta - w) @ (theta - w))
        for c, zc, uc in zip(constraints, z, u):
            gap = imgs[c.block] - zc
            uc += gap
            pri_sq += float(gap @ gap)
        r_pri = math.sqrt(pri_sq)

        l1 = float(np.abs(theta).sum())
        viol = 0.0
        acceptable = True
        for c, tol in zip(constraints, feas_tols):
            resid = c.residual(imgs[c.block])
            viol += max(0.0, resid - c.bound)
            if resid > tol:
                acceptable = False
        best_merit = min(best_merit, l1 + opts.penalty * viol)
        if viol < best_viol:
            best_viol = viol
            best_viol_theta = theta.copy()
        if acceptable and l1 < best_feasible_l1:
            best_feasible_l1 = l1
            best_feasible_theta = theta.copy()
        if it == midpoint:
            mid_best_viol = best_viol
        if opts.log_merit:
            merit_log.append(best_merit)

        k_theta_sq = float(theta @ theta) + sum(float(i @ i) for i in imgs)
        zeta_sq = float(w @ w) + sum(float(zc @ zc) for zc in z)
        eps_pri = math.sqrt(total_dim) * opts.abs_tol + opts.rel_tol * math.sqrt(
            max(k_theta_sq, zeta_sq)
        )
        dual_vec = u_w.copy()
        for c, uc in zip(constraints, u):
            dual_vec += trans[c.block] @ uc
        eps_dual = math.sqrt(n) * opts.abs_tol + opts.rel_tol * rho * float(
            np.linalg.norm(dual_vec)
        )
        if r_pri <= eps_pri and s_dual <= eps_dual:
            converged = True
            break

    if converged:
        theta_hat = theta
    elif best_feasible_theta is not None:
        theta_hat = best_feasible_theta
    else:
        theta_hat = best_viol_theta
    residuals = np.array(
        [c.residual(blocks[c.block] @ theta_hat) for c in constraints]
    )
    feasible = all(r <= tol for r, tol in zip(residuals, feas_tols))

    # the intersection is certified empty when the violation is far above the
    # feasibility scale after the full budget and stopped improving: the
    # iterates then circle a positive distance gap between the sets
    infeasible = (
        (not converged)
        and best_viol > 100.0 * opts.feasibility_slack * problem_scale
        and best_viol > 0.99 * mid_best_viol
    )
    if infeasible:
        status = STATUS_INFEASIBLE
        ok = False
    elif converged and feasible:
        status = STATUS_CONVERGED
        ok = True
    else:
        status = STATUS_MAX_ITERS if not converged else STATUS_CONVERGED
        ok = converged and feasible

    return SolverResult(
        theta_hat=theta_hat,
        iterations=it,
        converged=ok,
        constraint_residuals=residuals,
        status=status,
        merit_history=np.asarray(merit_log) if opts.log_merit else None,
    )


def bpdn(p: BpdnProblem, opts: SolverOptions | None = None) -> SolverResult:
    """Basis pursuit denoising: l1 minimization inside one l2 misfit ball."""
    opts = opts or SolverOptions()
    _validate_finite(p.A, p.y)
    if not math.isfinite(p.epsilon):
        raise SolverInputError("epsilon must be finite")
    n = p.A.shape[1]
    constr = [_Constraint("ball", np.asarray(p.y, dtype=float), float(p.epsilon), 0)]
    return _admm([np.asarray(p.A, dtype=float)], constr, n, opts)


def gq_side_solve(p: GqSideProblem, opts: SolverOptions | None = None) -> SolverResult:
    """Side decoder for graded quantization.

    Enforces, for each nonempty group i, the misfit ball
    ``||y_i - A_i theta||_2 <= eps_i`` and the quantization-consistency box
    ``||y_i - A_i theta||_inf <= delta_i / 2``.  Non-finite bounds disable the
    corresponding constraint.  If the constraint intersection is certified
    empty the boxes are dropped and the problem re-solved with the balls only
    (``dropped_boxes`` is set on the result).
    """
    opts = opts or SolverOptions()
    groups = p.groups
    if not groups:
        raise SolverInputError("all groups are empty")
    n = groups[0].A.shape[1]
    if any(g.A.shape[1] != n for g in groups):
        raise SolverInputError("groups disagree on signal dimension")

    def build(with_boxes: bool) -> tuple[list[np.ndarray], list[_Constraint]]:
        blocks: list[np.ndarray] = []
        constraints: list[_Constraint] = []
        for g in groups:
            blocks.append(np.asarray(g.A, dtype=float))
            blk = len(blocks) - 1
            y = np.asarray(g.y, dtype=float)
            if math.isfinite(g.epsilon):
                constraints.append(_Constraint("ball", y, float(g.epsilon), blk))
            if with_boxes and math.isfinite(g.delta):
                constraints.append(_Constraint("box", y, float(g.delta) / 2.0, blk))
        return blocks, constraints

    blocks, constraints = build(with_boxes=True)
    if not constraints:
        raise SolverInputError("no active constraints (all bounds infinite)")
    result = _admm(blocks, constraints, n, opts)
    has_boxes = any(c.kind == "box" for c in constraints)
    if result.status == STATUS_INFEASIBLE and has_boxes:
        blocks2, balls = build(with_boxes=False)
        if balls:
            fallback = _admm(blocks2, balls, n, opts)
            residuals = np.array(
                [c.residual(blocks[c.block] @ fallback.theta_hat) for c in constraints]
            )
            return SolverResult(
                theta_hat=fallback.theta_hat,
                iterations=result.iterations + fallback.iterations,
                converged=fallback.converged,
                constraint_residuals=residuals,
                status=fallback.status,
                dropped_boxes=True,
                merit_history=fallback.merit_history,
            )
    return result


def default_epsilon(delta: float, count: int, kappa: float = 1.0) -> float:
    """RMS norm of i.i.d. uniform quantization error over `count` entries.

    kappa * delta * sqrt(count / 12); the conventional misfit bound for
    measurements quantized with step delta.
    """
    if not delta > 0:
        raise InvalidConfigError("delta must be positive")
    if count < 0:
        raise InvalidConfigError("count must be nonnegative")
    return kappa * delta * math.sqrt(count / 12.0)
