"""Per-domain PCA subspaces and two subspace-based adaptation methods.

Subspace Alignment maps the source basis onto the target basis with the
closed form ``M = P_S^T P_T``. The geodesic flow kernel integrates the
projection onto every subspace along the geodesic from source to target,
giving a D x D PSD matrix that defines a distance between samples. Both feed
a 1-nearest-neighbour classifier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ComplementUnavailable,
    DegenerateVariance,
    DimensionMismatch,
    InputError,
    InsufficientSamples,
)
from .grassmann import Subspace, check_compatible, complete_basis, fix_signs

# below this principal angle the GFK coefficients use their Taylor series
SMALL_ANGLE = 1e-6
NN_CHUNK = 2048


@dataclass(frozen=True, eq=False)
class AlignmentMap:
    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"alignment map must be square, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InputError("alignment map has non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)


@dataclass(frozen=True, eq=False)
class GfkKernel:
    g: np.ndarray

    def __post_init__(self):
        g = np.array(self.g, dtype=float, copy=True)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise DimensionMismatch(f"kernel must be square, got {g.shape}")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)


def _features(x, name="features") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise DimensionMismatch(f"{name} must be an n x D matrix, got shape {x.shape}")
    return x


def learn_subspace(data, k: int) -> Subspace:
    """Top-``k`` principal directions of the mean-centred features.

    ``data`` is a feature matrix (rows are samples) or any object with a
    ``features`` attribute. Columns come out in decreasing order of variance
    with the largest-magnitude entry of each made positive.
    """
    x = _features(getattr(data, "features", data))
    n, d = x.shape
    if not 1 <= k <= d:
        raise InputError(f"k={k} must lie in [1, D={d}]")
    if k > n - 1:
        raise InsufficientSamples(f"k={k} needs at least {k + 1} samples, got {n}")
    xc = x - x.mean(axis=0)
    _, s, vt = np.linalg.svd(xc, full_matrices=False)
    if s[k - 1] < 1e-12 * max(1.0, s[0]):
        raise DegenerateVariance(f"data rank is below k={k} (singular value {s[k - 1]:.3e})")
    return Subspace(fix_signs(vt[:k].T))


def subspace_alignment(source: Subspace, target: Subspace) -> AlignmentMap:
    """Closed-form minimizer of ``||P_S M - P_T||_F^2``."""
    check_compatible(source, target)
    return AlignmentMap(source.basis.T @ target.basis)


def _gfk_coefficients(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # integrals over t in [0, 1] of cos^2(t th), cos(t th) sin(t th) / sin th, sin^2(t th) / sin^2 th
    small = theta < SMALL_ANGLE
    th = np.where(small, 1.0, theta)
    s, s2 = np.sin(th), np.sin(2 * th)
    c1 = 0.5 + s2 / (4 * th)
    c2 = s / (2 * th)
    c3 = (0.5 - s2 / (4 * th)) / s**2
    t2 = theta**2
    c1 = np.where(small, 1.0 - t2 / 3.0, c1)
    c2 = np.where(small, 0.5 - t2 / 12.0, c2)
    c3 = np.where(small, 1.0 / 3.0 + 2.0 * t2 / 45.0, c3)
    return c1, c2, c3


def gfk_kernel(source: Subspace, target: Subspace) -> GfkKernel:
    """Geodesic flow kernel ``G = int_0^1 Phi(t) Phi(t)^T dt`` in closed form.

    With ``P_S^T P_T = U cos(Theta) V^T`` and ``R_S`` the orthogonal
    complement of the source, the geodesic is
    ``Phi(t) = P_S U cos(t Theta) + R_S R_S^T P_T V sin(t Theta) / sin(Theta)``.
    Expanding the outer product and integrating term by term leaves three
    diagonal coefficient matrices that depend only on the angles.
    """
    check_compatible(source, target)
    d, k = source.basis.shape
    if 2 * k > d:
        raise ComplementUnavailable(f"GFK needs 2K <= D, got K={k}, D={d}")
    ps, pt = source.basis, target.basis
    u, s, vt = np.linalg.svd(ps.T @ pt)
    theta = np.arccos(np.clip(s, 0.0, 1.0))
    rs = complete_basis(source)
    a = ps @ u
    y = rs @ (rs.T @ (pt @ vt.T))
    c1, c2, c3 = _gfk_coefficients(theta)
    cross = (a * c2) @ y.T
    g = (a * c1) @ a.T + cross + cross.T + (y * c3) @ y.T
    return GfkKernel(0.5 * (g + g.T))


def nearest_neighbor(train_features, train_labels, test_features, metric=None) -> np.ndarray:
    """1-NN labels; ``metric`` is an optional PSD matrix for ``(a-b)^T G (a-b)``.

    Ties go to the lowest training index.
    """
    xtr = _features(train_features, "train_features")
    xte = _features(test_features, "test_features")
    ytr = np.asarray(train_labels)
    if xtr.shape[0] < 1:
        raise InputError("need at least one training sample")
    if ytr.shape != (xtr.shape[0],):
        raise DimensionMismatch(f"{xtr.shape[0]} training rows but labels have shape {ytr.shape}")
    if xtr.shape[1] != xte.shape[1]:
        raise DimensionMismatch(f"train has D={xtr.shape[1]}, test has D={xte.shape[1]}")
    if metric is None:
        gtr = xtr
    else:
        metric = np.asarray(metric, dtype=float)
        if metric.shape != (xtr.shape[1],) * 2:
            raise DimensionMismatch(f"metric is {metric.shape}, features have D={xtr.shape[1]}")
        gtr = xtr @ metric
    train_sq = np.einsum("ij,ij->i", xtr, gtr)
    out = np.empty(xte.shape[0], dtype=ytr.dtype)
    for start in range(0, xte.shape[0], NN_CHUNK):
        block = xte[start : start + NN_CHUNK]
        # the test-point norm is constant per row and does not move the argmin
        d2 = train_sq[None, :] - 2.0 * block @ gtr.T
        out[start : start + NN_CHUNK] = ytr[np.argmin(d2, axis=1)]
    return out


def gfk_classify(train_features, train_labels, test_features, g: GfkKernel) -> np.ndarray:
    return nearest_neighbor(train_features, train_labels, test_features, metric=g.g)


def sa_classify(
    train_features,
    train_labels,
    test_features,
    source: Subspace,
    target: Subspace,
    alignment: AlignmentMap | None = None,
) -> np.ndarray:
    """1-NN after projecting training rows by ``P_S M`` and test rows by ``P_T``."""
    check_compatible(source, target)
    if alignment is None:
        alignment = subspace_alignment(source, target)
    if alignment.m.shape != (source.dim, source.dim):
        raise DimensionMismatch(f"alignment map is {alignment.m.shape}, expected K={source.dim}")
    xtr = _features(train_features, "train_features")
    xte = _features(test_features, "test_features")
    if xtr.shape[1] != source.ambient_dim or xte.shape[1] != source.ambient_dim:
        raise DimensionMismatch("feature dimension does not match the subspaces")
    ztr = xtr @ (source.basis @ alignment.m)
    zte = xte @ target.basis
    return nearest_neighbor(ztr, train_labels, zte)
