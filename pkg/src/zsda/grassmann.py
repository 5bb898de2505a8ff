"""Points on the Grassmann manifold G(K, D), principal angles and distances.

A point is stored as a D x K matrix with orthonormal columns. Every distance
is available in two algebraically equivalent forms: one computed from the
principal angles, one computed directly from the bases. Having both lets the
test-suite cross-check them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DimensionMismatch, NotOrthonormal, RankDeficient

logger = logging.getLogger(__name__)

DistanceKind = Literal["binet_cauchy", "chordal", "martin", "procrustes"]
DistanceForm = Literal["angles", "bases"]

DISTANCE_KINDS: tuple[str, ...] = ("binet_cauchy", "chordal", "martin", "procrustes")
DISTANCE_FORMS: tuple[str, ...] = ("angles", "bases")

ORTHONORMAL_TOL = 1e-10
RANK_TOL = 1e-10
# |det| (or prod cos) at or below this makes the Martin distance infinite
MARTIN_ZERO_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class Subspace:
    """A K-dimensional linear subspace of R^D held as an orthonormal basis.

    The basis is copied and made read-only on construction. Use
    :func:`make_subspace` to build one from an arbitrary full-rank matrix.
    """

    basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=float, copy=True)
        if b.ndim == 1:
            b = b[:, None]
        if b.ndim != 2 or b.shape[1] < 1 or b.shape[1] > b.shape[0]:
            raise DimensionMismatch(f"basis must be D x K with 1 <= K <= D, got shape {b.shape}")
        dev = orthonormality_error(b)
        if dev > ORTHONORMAL_TOL:
            raise NotOrthonormal(f"basis deviates from orthonormal by {dev:.3e}")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def __repr__(self):
        return f"Subspace(D={self.ambient_dim}, K={self.dim})"


@dataclass(frozen=True)
class PrincipalAngles:
    """Principal angles (radians, ascending) plus the SVD factors behind them.

    ``u`` and ``vt`` come from ``P1^T P2 = U diag(cos) V^T``; the Procrustes
    bases formula reuses them.
    """

    angles: np.ndarray
    cosines: np.ndarray
    u: np.ndarray
    vt: np.ndarray

    def __len__(self):
        return len(self.angles)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.angles, dtype=dtype)


def orthonormality_error(basis: np.ndarray) -> float:
    """Frobenius norm of ``B^T B - I``."""
    basis = np.asarray(basis, dtype=float)
    k = basis.shape[1]
    return float(np.linalg.norm(basis.T @ basis - np.eye(k)))


def fix_signs(basis: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive."""
    basis = np.array(basis, dtype=float, copy=True)
    idx = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[idx, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


def make_subspace(raw) -> Subspace:
    """Orthonormalize the columns of ``raw`` and wrap them as a :class:`Subspace`.

    Raises
    ------
    RankDeficient
        If the smallest singular value of ``raw`` is below ``1e-10`` times
        the largest.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim == 1:
        raw = raw[:, None]
    if raw.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got ndim={raw.ndim}")
    d, k = raw.shape
    if not 1 <= k <= d:
        raise DimensionMismatch(f"need 1 <= K <= D, got D={d}, K={k}")
    if not np.all(np.isfinite(raw)):
        raise RankDeficient("matrix has non-finite entries")
    s = np.linalg.svd(raw, compute_uv=False)
    if s[0] == 0.0 or s[-1] < RANK_TOL * s[0]:
        raise RankDeficient(f"numerical rank below K={k} (singular values {s[-1]:.3e} / {s[0]:.3e})")
    q, _ = np.linalg.qr(raw)
    # one extra pass of QR cleans up loss of orthogonality from ill-conditioned input
    q, _ = np.linalg.qr(q)
    return Subspace(fix_signs(q))


def random_subspace(d: int, k: int, rng: np.random.Generator | None = None) -> Subspace:
    """Draw a uniformly distributed point on G(k, d)."""
    rng = np.random.default_rng(rng)
    return make_subspace(rng.standard_normal((d, k)))


def check_compatible(p1: Subspace, p2: Subspace) -> None:
    if p1.basis.shape != p2.basis.shape:
        raise DimensionMismatch(
            f"subspaces live on different Grassmannians: {p1.basis.shape} vs {p2.basis.shape}"
        )


def principal_angles(p1: Subspace, p2: Subspace) -> PrincipalAngles:
    check_compatible(p1, p2)
    u, s, vt = np.linalg.svd(p1.basis.T @ p2.basis)
    cosines = np.clip(s, 0.0, 1.0)
    angles = np.arccos(cosines)
    return PrincipalAngles(angles=angles, cosines=cosines, u=u, vt=vt)


def _distance_from_angles(kind: str, theta: np.ndarray) -> float:
    if kind == "binet_cauchy":
        return float(1.0 - np.prod(np.cos(theta) ** 2))
    if kind == "chordal":
        return float(np.sum(np.sin(theta) ** 2))
    if kind == "martin":
        cos2 = np.cos(theta) ** 2
        if np.sqrt(np.prod(cos2)) <= MARTIN_ZERO_TOL:
            return float("inf")
        return float(-np.sum(np.log(cos2)))
    if kind == "procrustes":
        return float(4.0 * np.sum(np.sin(theta / 2.0) ** 2))
    raise ValueError(f"unknown distance kind {kind!r}")


def _distance_from_bases(kind: str, p1: Subspace, p2: Subspace, pa: PrincipalAngles | None) -> float:
    a, b = p1.basis, p2.basis
    if kind == "binet_cauchy":
        return float(1.0 - np.linalg.det(a.T @ b) ** 2)
    if kind == "chordal":
        return float(0.5 * np.linalg.norm(a @ a.T - b @ b.T) ** 2)
    if kind == "martin":
        # the sign of det depends on the representatives; only |det| is intrinsic
        det = abs(np.linalg.det(a.T @ b))
        if det <= MARTIN_ZERO_TOL:
            return float("inf")
        return float(-2.0 * np.log(det))
    if kind == "procrustes":
        if pa is None:
            pa = principal_angles(p1, p2)
        return float(np.linalg.norm(a @ pa.u - b @ pa.vt.T) ** 2)
    raise ValueError(f"unknown distance kind {kind!r}")


def distance(
    p1: Subspace,
    p2: Subspace,
    kind: DistanceKind = "binet_cauchy",
    form: DistanceForm = "angles",
) -> float:
    """Squared distance between two subspaces.

    Parameters
    ----------
    p1, p2 : Subspace
        Points on the same Grassmannian.
    kind : {"binet_cauchy", "chordal", "martin", "procrustes"}
    form : {"angles", "bases"}
        Evaluate via the principal angles or directly from the bases. Both
        give the same value up to rounding.

    Returns
    -------
    float
        Non-negative; the Martin distance is ``inf`` when the subspaces have
        an orthogonal direction in common.
    """
    check_compatible(p1, p2)
    if kind not in DISTANCE_KINDS:
        raise ValueError(f"unknown distance kind {kind!r}")
    if form == "angles":
        return _distance_from_angles(kind, principal_angles(p1, p2).angles)
    if form == "bases":
        return _distance_from_bases(kind, p1, p2, None)
    raise ValueError(f"unknown distance form {form!r}")


def bc_distance(p1: Subspace, p2: Subspace) -> float:
    """Binet-Cauchy distance ``1 - det(P1^T P2)^2``, the workhorse metric."""
    return distance(p1, p2, "binet_cauchy", "bases")


def complete_basis(p: Subspace) -> np.ndarray:
    """Orthonormal basis (D x (D-K)) of the orthogonal complement of ``p``.

    Deterministic: taken from the full QR factorization of the basis, with
    the same column sign convention as :func:`make_subspace`.
    """
    d, k = p.basis.shape
    q, _ = np.linalg.qr(p.basis, mode="complete")
    return fix_signs(q[:, k:]) if d > k else np.zeros((d, 0))
