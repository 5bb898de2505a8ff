"""Weighted Binet-Cauchy mean on the Grassmannian.

Minimizes ``f(P) = 1 - sum_i w_i det(P^T P_i)^2`` subject to ``P^T P = I``
with a Cayley (Crank-Nicolson) update, which moves along a curve that stays
exactly on the constraint set, and a backtracking line search on the step.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InputError, NotOrthonormal, SingularUpdate, StalledLineSearch
from .grassmann import Subspace

logger = logging.getLogger(__name__)

# |det(P^T P_i)| below this drops the anchor from the gradient
DET_SKIP_TOL = 1e-12
SINGULAR_COND = 1e12
# the printed gradient is half the derivative of det^2; see bc_gradient
GRADIENT_SCALE = 2.0


@dataclass(frozen=True, eq=False)
class WeightedAnchorSet:
    """Anchor subspaces with convex weights."""

    anchors: tuple[Subspace, ...]
    weights: np.ndarray

    def __init__(self, anchors: Sequence[Subspace], weights):
        anchors = tuple(anchors)
        weights = np.asarray(weights, dtype=float).ravel()
        if not anchors:
            raise InputError("anchor set is empty")
        if len(anchors) != weights.size:
            raise InputError(f"{len(anchors)} anchors but {weights.size} weights")
        shape = anchors[0].basis.shape
        if any(a.basis.shape != shape for a in anchors):
            raise DimensionMismatch("anchors must share D and K")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise InputError("weights must be finite and non-negative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise InputError(f"weights sum to {weights.sum():.15g}, expected 1")
        weights.setflags(write=False)
        stacked = np.stack([a.basis for a in anchors])
        stacked.setflags(write=False)
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "_stacked", stacked)

    @property
    def shape(self) -> tuple[int, int]:
        return self.anchors[0].basis.shape

    def __len__(self):
        return len(self.anchors)


@dataclass(frozen=True)
class OptimizerConfig:
    initial_step: float = 1.0
    max_iters: int = 500
    grad_tol: float = 1e-6
    obj_rel_tol: float = 1e-9
    backtrack_factor: float = 0.5
    max_backtracks: int = 30

    def __post_init__(self):
        if not self.initial_step > 0:
            raise InputError("initial_step must be positive")
        if self.max_iters < 1:
            raise InputError("max_iters must be at least 1")
        if not (self.grad_tol > 0 and self.obj_rel_tol > 0):
            raise InputError("tolerances must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise InputError("backtrack_factor must lie in (0, 1)")
        if self.max_backtracks < 0:
            raise InputError("max_backtracks must be non-negative")


@dataclass
class OptimizerTrace:
    objective_per_iter: list[float] = field(default_factory=list)
    final_grad_norm: float = float("nan")
    iterations: int = 0
    converged_by: str = "max_iters"

    def to_dict(self) -> dict:
        return {
            "objective": [float(v) for v in self.objective_per_iter],
            "iterations": int(self.iterations),
            "final_grad_norm": float(self.final_grad_norm),
            "converged_by": self.converged_by,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _check(p: Subspace, anchors: WeightedAnchorSet) -> None:
    if p.basis.shape != anchors.shape:
        raise DimensionMismatch(f"point is {p.basis.shape}, anchors are {anchors.shape}")


def _cross(p: np.ndarray, anchors: WeightedAnchorSet) -> np.ndarray:
    # (N, K, K) stack of P^T P_i
    return np.einsum("dk,ndj->nkj", p, anchors._stacked)


def bc_objective(p: Subspace, anchors: WeightedAnchorSet) -> float:
    """``1 - sum_i w_i det(P^T P_i)^2``; lies in [0, 1]."""
    _check(p, anchors)
    dets = np.linalg.det(_cross(p.basis, anchors))
    return float(1.0 - np.dot(anchors.weights, dets**2))


def bc_gradient(p: Subspace, anchors: WeightedAnchorSet) -> np.ndarray:
    """Ambient gradient ``-sum_i w_i det(P^T P_i)^2 P_i (P^T P_i)^{-1}``.

    This is the published formula, which is exactly ``1 / GRADIENT_SCALE``
    times the derivative of :func:`bc_objective`. The constant only rescales
    the step size, which the line search absorbs.

    Anchors with ``|det(P^T P_i)| < 1e-12`` are skipped: their contribution
    to the objective is flat to O(det^2) and the inverse is unreliable.
    """
    _check(p, anchors)
    cross = _cross(p.basis, anchors)
    dets = np.linalg.det(cross)
    g = np.zeros_like(p.basis)
    for w, det, m, pi in zip(anchors.weights, dets, cross, anchors._stacked):
        if w == 0.0 or abs(det) < DET_SKIP_TOL:
            continue
        # P_i M^{-1} == solve(M^T, P_i^T)^T
        g -= w * det**2 * np.linalg.solve(m.T, pi.T).T
    return g


def skew_matrix(p: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """``A = G P^T - P G^T`` as an explicit D x D matrix."""
    return grad @ p.T - p @ grad.T


def skew_norm(p: np.ndarray, grad: np.ndarray) -> float:
    """Frobenius norm of ``G P^T - P G^T`` without forming the D x D matrix.

    Uses ``P^T P = I``: ``||A||^2 = 2 ||G||^2 - 2 tr((P^T G)^2)``.
    """
    ptg = p.T @ grad
    sq = 2.0 * np.sum(grad * grad) - 2.0 * np.sum(ptg * ptg.T)
    return float(np.sqrt(max(sq, 0.0)))


def cayley_transform(a: np.ndarray, eta: float) -> np.ndarray:
    """``Q = (I + eta/2 A)^{-1} (I - eta/2 A)``, orthogonal for skew ``A``."""
    n = a.shape[0]
    lhs = np.eye(n) + 0.5 * eta * a
    if np.linalg.cond(lhs) > SINGULAR_COND:
        raise SingularUpdate("I + eta/2 A is numerically singular")
    return np.linalg.solve(lhs, np.eye(n) - 0.5 * eta * a)


def cayley_step(p: Subspace, grad, eta: float) -> Subspace:
    """Feasible update ``Q P`` with ``Q`` the Cayley transform of ``A``.

    Never forms the D x D matrices: with ``A = U V^T``, ``U = [G, P]`` and
    ``V = [P, -G]``, the Sherman-Morrison-Woodbury identity gives
    ``Q P = P - eta U (I + eta/2 V^T U)^{-1} V^T P``, a 2K x 2K solve.
    """
    if eta < 0:
        raise InputError("step size must be non-negative")
    x = p.basis
    grad = np.asarray(grad, dtype=float)
    if grad.shape != x.shape:
        raise DimensionMismatch(f"gradient is {grad.shape}, point is {x.shape}")
    if eta == 0.0:
        return p
    u = np.hstack([grad, x])
    v = np.hstack([x, -grad])
    k2 = u.shape[1]
    small = np.eye(k2) + 0.5 * eta * (v.T @ u)
    if np.linalg.cond(small) > SINGULAR_COND:
        raise SingularUpdate(f"Cayley system is numerically singular at eta={eta:g}")
    y = x - eta * u @ np.linalg.solve(small, v.T @ x)
    try:
        return Subspace(y)
    except NotOrthonormal as exc:
        raise SingularUpdate(f"Cayley step lost feasibility at eta={eta:g}: {exc}") from exc


def minimize_bc(
    anchors: WeightedAnchorSet,
    init: Subspace,
    cfg: OptimizerConfig | None = None,
) -> tuple[Subspace, OptimizerTrace]:
    """Descend the weighted Binet-Cauchy objective from ``init``.

    Each iteration tries ``eta = cfg.initial_step`` and shrinks it by
    ``cfg.backtrack_factor`` until the objective strictly decreases, so the
    recorded objective sequence is monotone.

    Stops when ``||G P^T - P G^T||_F < grad_tol``, when the relative decrease
    falls below ``obj_rel_tol``, or after ``max_iters`` accepted steps.
    """
    cfg = cfg or OptimizerConfig()
    _check(init, anchors)
    p = init
    f = bc_objective(p, anchors)
    trace = OptimizerTrace(objective_per_iter=[f])
    eps = np.finfo(float).eps

    for _ in range(cfg.max_iters):
        g = bc_gradient(p, anchors)
        anorm = skew_norm(p.basis, g)
        if anorm < cfg.grad_tol:
            trace.converged_by = "gradient"
            break

        eta = cfg.initial_step
        accepted = None
        for _ in range(cfg.max_backtracks + 1):
            try:
                cand = cayley_step(p, g, eta)
            except SingularUpdate:
                eta *= cfg.backtrack_factor
                continue
            f_cand = bc_objective(cand, anchors)
            if f_cand < f:
                accepted = cand, f_cand
                break
            eta *= cfg.backtrack_factor

        if accepted is None:
            # slope along the curve is -GRADIENT_SCALE/2 * ||A||^2
            predicted = eta / cfg.backtrack_factor * 0.5 * GRADIENT_SCALE * anorm**2
            if predicted > 1e3 * eps * max(1.0, abs(f)):
                raise StalledLineSearch(
                    f"no decrease after {cfg.max_backtracks} backtracks (||A||={anorm:.3e}, f={f:.6e})"
                )
            logger.debug("line search hit the rounding floor at f=%.6e", f)
            trace.converged_by = "objective"
            break

        p, f_new = accepted
        rel = (f - f_new) / max(abs(f), eps)
        f = f_new
        trace.objective_per_iter.append(f)
        trace.iterations += 1
        if rel < cfg.obj_rel_tol:
            trace.converged_by = "objective"
            break
    else:
        trace.converged_by = "max_iters"

    trace.final_grad_norm = skew_norm(p.basis, bc_gradient(p, anchors))
    if trace.converged_by == "max_iters" and trace.final_grad_norm < cfg.grad_tol:
        trace.converged_by = "gradient"
    return p, trace
