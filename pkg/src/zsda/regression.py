"""Kernel regression from domain descriptors to subspaces.

Descriptors are min-max rescaled per factor using ranges learned from the
training descriptors, then compared with an RBF kernel
``k(a, b) = exp(-||a - b||^2 / (2 sigma^2))``. Normalized kernel values act as
weights, in the Euclidean case for a weighted average and on the Grassmannian
for a weighted Binet-Cauchy mean.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateKernel, DimensionMismatch, EmptyTrainingSet, InputError
from .grassmann import Subspace
from .manifold_opt import OptimizerConfig, OptimizerTrace, WeightedAnchorSet, minimize_bc

DEFAULT_SIGMA = 0.1


def as_descriptor(z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.ndim != 1:
        raise InputError(f"descriptor must be a vector, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise InputError("descriptor entries must be finite")
    return z


def _stack_descriptors(descriptors) -> np.ndarray:
    zs = [as_descriptor(z) for z in descriptors]
    if not zs:
        raise EmptyTrainingSet("no descriptors given")
    m = zs[0].size
    if any(z.size != m for z in zs):
        raise DimensionMismatch("descriptors must all have the same length")
    return np.vstack(zs)


def fit_normalizer(descriptors) -> tuple[np.ndarray, np.ndarray]:
    """Per-factor minimum and maximum over the training descriptors."""
    z = _stack_descriptors(descriptors)
    return z.min(axis=0), z.max(axis=0)


@dataclass(frozen=True)
class KernelSpec:
    """RBF kernel on rescaled descriptors.

    ``factor_mins``/``factor_maxs`` define the rescaling to [0, 1] on the
    training range. Factors with ``min == max`` map to 0. Queries outside the
    range are not clamped.
    """

    sigma: float = DEFAULT_SIGMA
    factor_mins: tuple[float, ...] | None = None
    factor_maxs: tuple[float, ...] | None = None
    family: str = "rbf"

    def __post_init__(self):
        if self.family != "rbf":
            raise InputError(f"unsupported kernel family {self.family!r}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise InputError("sigma must be positive")
        if (self.factor_mins is None) != (self.factor_maxs is None):
            raise InputError("factor_mins and factor_maxs must be given together")
        if self.factor_mins is not None:
            lo = tuple(float(v) for v in self.factor_mins)
            hi = tuple(float(v) for v in self.factor_maxs)
            if len(lo) != len(hi):
                raise DimensionMismatch("factor_mins and factor_maxs differ in length")
            if any(h < l for l, h in zip(lo, hi)):
                raise InputError("factor_maxs must be >= factor_mins")
            object.__setattr__(self, "factor_mins", lo)
            object.__setattr__(self, "factor_maxs", hi)

    @classmethod
    def fit(cls, descriptors, sigma: float = DEFAULT_SIGMA) -> "KernelSpec":
        lo, hi = fit_normalizer(descriptors)
        return cls(sigma=sigma, factor_mins=tuple(lo), factor_maxs=tuple(hi))

    @property
    def fitted(self) -> bool:
        return self.factor_mins is not None

    def normalize(self, z) -> np.ndarray:
        """Rescale descriptor(s) with the fitted affine map (no clamping)."""
        if not self.fitted:
            raise InputError("KernelSpec normalization has not been fitted")
        z = np.asarray(z, dtype=float)
        lo = np.asarray(self.factor_mins)
        hi = np.asarray(self.factor_maxs)
        if z.shape[-1] != lo.size:
            raise DimensionMismatch(f"descriptor has {z.shape[-1]} factors, kernel expects {lo.size}")
        span = hi - lo
        degenerate = span == 0
        out = (z - lo) / np.where(degenerate, 1.0, span)
        return np.where(degenerate, 0.0, out)

    def __call__(self, a, b) -> np.ndarray:
        """Kernel value(s) on already-normalized descriptors."""
        diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        return np.exp(-np.sum(diff * diff, axis=-1) / (2.0 * self.sigma**2))

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "sigma": float(self.sigma),
            "factor_mins": list(self.factor_mins) if self.fitted else None,
            "factor_maxs": list(self.factor_maxs) if self.fitted else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(
            sigma=d["sigma"],
            factor_mins=d.get("factor_mins"),
            factor_maxs=d.get("factor_maxs"),
            family=d.get("family", "rbf"),
        )

    @classmethod
    def from_json(cls, text: str) -> "KernelSpec":
        return cls.from_dict(json.loads(text))


def kernel_weights(spec: KernelSpec, train, query) -> np.ndarray:
    """Normalized kernel weights of ``query`` against each training descriptor.

    Raises
    ------
    DegenerateKernel
        If every kernel value underflows to zero, i.e. the query is too far
        from all training descriptors at this bandwidth.
    """
    z = _stack_descriptors(train)
    q = as_descriptor(query)
    if q.size != z.shape[1]:
        raise DimensionMismatch(f"query has {q.size} factors, training descriptors have {z.shape[1]}")
    k = spec(spec.normalize(z), spec.normalize(q))
    total = k.sum()
    if not total > 0:
        raise DegenerateKernel(f"all kernel values underflow at sigma={spec.sigma:g}")
    return k / total


def kernel_regression_euclidean(train: Sequence[tuple], spec: KernelSpec, query) -> float:
    """Nadaraya-Watson estimate for scalar targets."""
    if not train:
        raise EmptyTrainingSet("no training pairs")
    descriptors = [z for z, _ in train]
    targets = np.array([float(t) for _, t in train])
    w = kernel_weights(spec, descriptors, query)
    return float(w @ targets)


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Descriptor/subspace pairs observed on the source domains."""

    descriptors: np.ndarray
    subspaces: tuple[Subspace, ...]

    def __init__(self, pairs: Sequence[tuple]):
        pairs = list(pairs)
        if not pairs:
            raise EmptyTrainingSet("training set needs at least one pair")
        z = _stack_descriptors([d for d, _ in pairs])
        subspaces = tuple(s for _, s in pairs)
        shape = subspaces[0].basis.shape
        if any(s.basis.shape != shape for s in subspaces):
            raise DimensionMismatch("training subspaces must share D and K")
        z.setflags(write=False)
        object.__setattr__(self, "descriptors", z)
        object.__setattr__(self, "subspaces", subspaces)

    def __len__(self):
        return len(self.subspaces)


def predict_subspace(
    train: TrainingSet,
    spec: KernelSpec,
    query,
    cfg: OptimizerConfig | None = None,
) -> tuple[Subspace, OptimizerTrace]:
    """Predict the subspace at ``query`` as a kernel-weighted BC mean.

    The descent starts from the training subspace with the largest weight
    (lowest index on ties).
    """
    w = kernel_weights(spec, train.descriptors, query)
    anchors = WeightedAnchorSet(train.subspaces, w)
    init = train.subspaces[int(np.argmax(w))]
    return minimize_bc(anchors, init, cfg)
