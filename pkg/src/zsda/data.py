"""Domain datasets and the JSON manifest that indexes them on disk.

A manifest looks like::

    {"domains": [{"id": "d1", "descriptor": [5.0, 1.5],
                  "features": "d1_X.csv", "labels": "d1_y.csv"}]}

Paths are relative to the manifest's directory. A domain's train/test split
lives next to its features in ``<id>_split.csv`` when present.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import io
from .errors import DimensionMismatch, InputError, ManifestError, MissingLabels, UnknownTargetId
from .regression import as_descriptor

# audit(phase, path) is called before every file read
AuditHook = Callable[[str, str], None]


@dataclass(eq=False)
class DomainDataset:
    """Features ``(n, D)``, optional labels, descriptor and split of one domain."""

    features: np.ndarray
    descriptor: np.ndarray
    id: str = ""
    labels: Optional[np.ndarray] = None
    train_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2:
            raise DimensionMismatch(f"{self.id}: features must be n x D, got {self.features.shape}")
        self.descriptor = as_descriptor(self.descriptor)
        n = self.features.shape[0]
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if self.labels.shape != (n,):
                raise DimensionMismatch(f"{self.id}: {n} rows but {self.labels.shape[0]} labels")
            if not np.issubdtype(self.labels.dtype, np.integer) or np.any(self.labels < 0):
                raise InputError(f"{self.id}: labels must be non-negative integers")
        if self.train_mask is not None:
            self.train_mask = np.asarray(self.train_mask, dtype=bool)
            if self.train_mask.shape != (n,):
                raise DimensionMismatch(f"{self.id}: split has {self.train_mask.size} rows, features {n}")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.features.shape[1]

    def _mask(self, train: bool) -> np.ndarray:
        if self.train_mask is None:
            return np.ones(self.n_samples, dtype=bool)
        return self.train_mask if train else ~self.train_mask

    def train_features(self) -> np.ndarray:
        return self.features[self._mask(True)]

    def test_features(self) -> np.ndarray:
        return self.features[self._mask(False)]

    def train_labels(self) -> np.ndarray:
        if self.labels is None:
            raise MissingLabels(f"domain {self.id!r} has no labels")
        return self.labels[self._mask(True)]

    def test_labels(self) -> np.ndarray:
        if self.labels is None:
            raise MissingLabels(f"domain {self.id!r} has no labels")
        return self.labels[self._mask(False)]


@dataclass(frozen=True)
class DomainEntry:
    id: str
    descriptor: tuple[float, ...]
    features_path: str
    labels_path: Optional[str] = None

    @property
    def split_path(self) -> str:
        return os.path.join(os.path.dirname(self.features_path), f"{self.id}_split.csv")

    def to_dict(self, base_dir: str) -> dict:
        d = {
            "id": self.id,
            "descriptor": list(self.descriptor),
            "features": os.path.relpath(self.features_path, base_dir),
        }
        if self.labels_path is not None:
            d["labels"] = os.path.relpath(self.labels_path, base_dir)
        return d


@dataclass
class DomainManifest:
    """Ordered list of domains; file paths are stored absolute."""

    domains: list[DomainEntry]
    base_dir: str = "."
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.domains:
            raise ManifestError("manifest lists no domains")
        ids = [d.id for d in self.domains]
        if len(set(ids)) != len(ids):
            raise ManifestError(f"duplicate domain ids in {ids}")
        m = {len(d.descriptor) for d in self.domains}
        if len(m) != 1:
            raise ManifestError("domain descriptors differ in length")

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.domains]

    def entry(self, domain_id: str) -> DomainEntry:
        for d in self.domains:
            if d.id == domain_id:
                return d
        raise UnknownTargetId(f"no domain {domain_id!r} in manifest (have {self.ids})")

    def without(self, domain_id: str) -> "DomainManifest":
        self.entry(domain_id)
        rest = [d for d in self.domains if d.id != domain_id]
        return DomainManifest(rest, self.base_dir, dict(self.meta))

    @classmethod
    def load(cls, path) -> "DomainManifest":
        base = os.path.dirname(os.path.abspath(path))
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
        return cls.from_dict(raw, base)

    @classmethod
    def from_dict(cls, raw: dict, base_dir: str) -> "DomainManifest":
        if not isinstance(raw, dict) or not isinstance(raw.get("domains"), list):
            raise ManifestError('manifest must be an object with a "domains" list')
        entries = []
        for i, d in enumerate(raw["domains"]):
            try:
                did = str(d["id"])
                desc = tuple(float(v) for v in d["descriptor"])
                feats = d["features"]
            except (KeyError, TypeError, ValueError) as exc:
                raise ManifestError(f"domain #{i}: malformed entry ({exc})") from exc
            if not all(np.isfinite(desc)):
                raise ManifestError(f"domain {did!r}: non-finite descriptor")
            fpath = os.path.join(base_dir, feats)
            if not os.path.isfile(fpath):
                raise ManifestError(f"domain {did!r}: features file {fpath} not found")
            lpath = d.get("labels")
            if lpath is not None:
                lpath = os.path.join(base_dir, lpath)
                if not os.path.isfile(lpath):
                    raise ManifestError(f"domain {did!r}: labels file {lpath} not found")
            entries.append(DomainEntry(did, desc, fpath, lpath))
        return cls(entries, base_dir, dict(raw.get("meta", {})))

    def to_dict(self) -> dict:
        out = {"domains": [d.to_dict(self.base_dir) for d in self.domains]}
        if self.meta:
            out["meta"] = self.meta
        return out

    def save(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def read(self, domain_id: str, phase: str = "load", audit: AuditHook | None = None) -> DomainDataset:
        """Load one domain's files, reporting each path to ``audit`` first."""
        e = self.entry(domain_id)

        def touch(path):
            if audit is not None:
                audit(phase, path)

        touch(e.features_path)
        x = io.load_matrix(e.features_path)
        y = None
        if e.labels_path is not None:
            touch(e.labels_path)
            y = io.load_labels(e.labels_path)
        mask = None
        if os.path.isfile(e.split_path):
            touch(e.split_path)
            mask = io.load_split(e.split_path)
        return DomainDataset(x, np.array(e.descriptor), e.id, y, mask)


def save_domains(datasets, out_dir, meta: dict | None = None) -> DomainManifest:
    """Write datasets as ``<id>_X.csv``/``_y.csv``/``_split.csv`` plus ``manifest.json``."""
    io.ensure_dir(out_dir)
    base_dir = os.path.abspath(out_dir)
    entries = []
    for ds in datasets:
        fpath = os.path.join(base_dir, f"{ds.id}_X.csv")
        io.save_matrix(fpath, ds.features)
        lpath = None
        if ds.labels is not None:
            lpath = os.path.join(base_dir, f"{ds.id}_y.csv")
            io.save_labels(lpath, ds.labels)
        if ds.train_mask is not None:
            io.save_split(os.path.join(base_dir, f"{ds.id}_split.csv"), ds.train_mask)
        entries.append(DomainEntry(ds.id, tuple(float(v) for v in ds.descriptor), fpath, lpath))
    manifest = DomainManifest(entries, base_dir, dict(meta or {}))
    manifest.save(os.path.join(base_dir, "manifest.json"))
    return manifest
