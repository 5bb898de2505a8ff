"""Zero-shot adaptation end to end, and the leave-one-domain-out harness.

The target domain enters :func:`zsda_predict` only as a descriptor. In
:func:`evaluate_target` its files are read in a separate ``"score"`` phase,
after the subspace has been predicted and the classifiers set up; pass an
``audit`` callback to record the order of file reads.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .adaptation import gfk_classify, gfk_kernel, learn_subspace, nearest_neighbor, sa_classify, subspace_alignment
from .data import AuditHook, DomainDataset, DomainManifest
from .errors import InputError, MissingLabels
from .grassmann import Subspace
from .manifold_opt import OptimizerConfig, OptimizerTrace
from .regression import DEFAULT_SIGMA, KernelSpec, TrainingSet, as_descriptor, predict_subspace

logger = logging.getLogger(__name__)

DA_METHODS = ("none", "sa", "gfk")
# default subspace dimension is D // DIM_RATIO (4096 -> 512 in the image setting)
DIM_RATIO = 8


def accuracy(pred, truth) -> float:
    pred, truth = np.asarray(pred), np.asarray(truth)
    if truth.size == 0:
        raise InputError("cannot score an empty test split")
    return float(np.count_nonzero(pred == truth) / truth.size)


def default_dim(datasets) -> int:
    """``min(D // 8, n_train - 1)`` over all domains, at least 1."""
    k = None
    for ds in datasets:
        cap = min(ds.ambient_dim // DIM_RATIO, ds.train_features().shape[0] - 1)
        k = cap if k is None else min(k, cap)
    return max(1, k or 1)


def _load_all(manifest: DomainManifest, phase: str, audit: AuditHook | None) -> list[DomainDataset]:
    return [manifest.read(did, phase, audit) for did in manifest.ids]


def _predict_from(
    sources: list[DomainDataset],
    subspaces: list[Subspace],
    target_descriptor,
    sigma: float,
    cfg: OptimizerConfig | None,
) -> tuple[Subspace, OptimizerTrace]:
    pairs = [(ds.descriptor, p) for ds, p in zip(sources, subspaces)]
    spec = KernelSpec.fit([ds.descriptor for ds in sources], sigma=sigma)
    return predict_subspace(TrainingSet(pairs), spec, as_descriptor(target_descriptor), cfg)


def zsda_predict(
    manifest: DomainManifest,
    target_descriptor,
    k: int,
    spec: KernelSpec | float = DEFAULT_SIGMA,
    cfg: OptimizerConfig | None = None,
    audit: AuditHook | None = None,
) -> tuple[Subspace, OptimizerTrace]:
    """Predict the subspace of an unseen domain from its descriptor alone.

    Every manifest domain contributes the PCA subspace of its train split.
    ``spec`` may be a bandwidth, or a :class:`KernelSpec` whose sigma is
    used; the rescaling ranges are always refitted on the manifest.
    """
    sigma = spec.sigma if isinstance(spec, KernelSpec) else float(spec)
    sources = _load_all(manifest, "train", audit)
    subspaces = [learn_subspace(ds.train_features(), k) for ds in sources]
    return _predict_from(sources, subspaces, target_descriptor, sigma, cfg)


@dataclass
class EvalRow:
    source_id: str
    accuracy_no_da: float
    accuracy_zsda_da: Optional[float] = None

    def to_dict(self) -> dict:
        d = {"source_id": self.source_id, "accuracy_no_da": self.accuracy_no_da}
        if self.accuracy_zsda_da is not None:
            d["accuracy_zsda_da"] = self.accuracy_zsda_da
        return d


@dataclass
class EvalReport:
    target_id: str
    rows: list[EvalRow]
    config: dict = field(default_factory=dict)

    @property
    def avg_no_da(self) -> float:
        return float(np.mean([r.accuracy_no_da for r in self.rows]))

    @property
    def avg_zsda_da(self) -> Optional[float]:
        vals = [r.accuracy_zsda_da for r in self.rows]
        if any(v is None for v in vals):
            return None
        return float(np.mean(vals))

    def to_dict(self) -> dict:
        d = {
            "target_id": self.target_id,
            "rows": [r.to_dict() for r in self.rows],
            "avg_no_da": self.avg_no_da,
        }
        if self.avg_zsda_da is not None:
            d["avg_zsda_da"] = self.avg_zsda_da
        d["config"] = self.config
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _require_labels(ds: DomainDataset) -> None:
    if ds.labels is None:
        raise MissingLabels(f"domain {ds.id!r} has no labels")


def evaluate_target(
    manifest: DomainManifest,
    target_id: str,
    k: int | None = None,
    spec: KernelSpec | float = DEFAULT_SIGMA,
    da: str = "gfk",
    cfg: OptimizerConfig | None = None,
    audit: AuditHook | None = None,
) -> EvalReport:
    """Leave ``target_id`` out, predict its subspace, score every source on it.

    For each remaining domain a 1-NN classifier is trained on that domain's
    train split and scored on the target's test split, once on raw features
    and, unless ``da == "none"``, once after adapting with the predicted
    target subspace.
    """
    if da not in DA_METHODS:
        raise InputError(f"da must be one of {DA_METHODS}, got {da!r}")
    sigma = spec.sigma if isinstance(spec, KernelSpec) else float(spec)
    target_entry = manifest.entry(target_id)
    rest = manifest.without(target_id)

    sources = _load_all(rest, "train", audit)
    for ds in sources:
        _require_labels(ds)
    if k is None:
        k = default_dim(sources)

    p_target = trace = None
    source_subspaces: list[Subspace | None] = [None] * len(sources)
    if da != "none":
        source_subspaces = [learn_subspace(ds.train_features(), k) for ds in sources]
        p_target, trace = _predict_from(sources, source_subspaces, target_entry.descriptor, sigma, cfg)

    adapters = []
    for ds, p_src in zip(sources, source_subspaces):
        if da == "gfk":
            adapters.append(gfk_kernel(p_src, p_target))
        elif da == "sa":
            adapters.append(subspace_alignment(p_src, p_target))
        else:
            adapters.append(None)

    target = manifest.read(target_id, "score", audit)
    _require_labels(target)
    x_test, y_test = target.test_features(), target.test_labels()

    rows = []
    for ds, p_src, adapter in zip(sources, source_subspaces, adapters):
        x_tr, y_tr = ds.train_features(), ds.train_labels()
        row = EvalRow(ds.id, accuracy(nearest_neighbor(x_tr, y_tr, x_test), y_test))
        if da == "gfk":
            row.accuracy_zsda_da = accuracy(gfk_classify(x_tr, y_tr, x_test, adapter), y_test)
        elif da == "sa":
            row.accuracy_zsda_da = accuracy(sa_classify(x_tr, y_tr, x_test, p_src, p_target, adapter), y_test)
        rows.append(row)

    config = {
        "k": int(k),
        "sigma": sigma,
        "da": da,
        "seed": manifest.meta.get("seed"),
        "classifier": "1nn",
    }
    if trace is not None:
        config["optimizer"] = {"iterations": trace.iterations, "converged_by": trace.converged_by}
    return EvalReport(target_id, rows, config)


def evaluate_all_targets(
    manifest: DomainManifest,
    k: int | None = None,
    spec: KernelSpec | float = DEFAULT_SIGMA,
    da: str = "gfk",
    cfg: OptimizerConfig | None = None,
    workers: int = 1,
) -> list[EvalReport]:
    """One :func:`evaluate_target` per domain, in manifest order."""

    def run(did):
        return evaluate_target(manifest, did, k, spec, da, cfg)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, manifest.ids))
    return [run(did) for did in manifest.ids]


def summarize(reports: list[EvalReport]) -> dict:
    """Grand averages over per-target averages."""
    out = {
        "targets": [r.target_id for r in reports],
        "avg_no_da": float(np.mean([r.avg_no_da for r in reports])),
    }
    zs = [r.avg_zsda_da for r in reports]
    if all(v is not None for v in zs):
        out["avg_zsda_da"] = float(np.mean(zs))
        out["targets_improved"] = int(sum(r.avg_zsda_da >= r.avg_no_da for r in reports))
    return out


def within_domain_accuracy(manifest: DomainManifest, domain_id: str) -> float:
    """1-NN trained and tested on the same domain's splits: the ceiling."""
    ds = manifest.read(domain_id, "score")
    _require_labels(ds)
    return accuracy(nearest_neighbor(ds.train_features(), ds.train_labels(), ds.test_features()), ds.test_labels())
