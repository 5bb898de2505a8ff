"""Plain-CSV readers and writers for matrices, subspaces, labels and splits."""

from __future__ import annotations

import logging
import os

import numpy as np

from .errors import InputError, NotOrthonormal
from .grassmann import ORTHONORMAL_TOL, Subspace, make_subspace, orthonormality_error

logger = logging.getLogger(__name__)

# loaded bases within WARN_TOL are accepted silently, up to REPAIR_TOL repaired
SUBSPACE_WARN_TOL = 1e-6
SUBSPACE_REPAIR_TOL = 1e-3


def save_matrix(path, m) -> None:
    """Write a 2-D array as headerless CSV with round-trip precision."""
    m = np.asarray(m, dtype=float)
    if m.ndim == 1:
        m = m[:, None]
    lines = [",".join("%.17g" % v for v in row) for row in m]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_matrix(path) -> np.ndarray:
    try:
        with open(path) as fh:
            m = np.loadtxt(fh, delimiter=",", dtype=float, ndmin=2)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read numeric CSV {path}: {exc}") from exc
    if m.size == 0:
        raise InputError(f"{path} is empty")
    if not np.all(np.isfinite(m)):
        raise InputError(f"{path} contains non-finite values")
    return m


def save_subspace(path, p: Subspace) -> None:
    save_matrix(path, p.basis)


def load_subspace(path) -> Subspace:
    """Read a basis, repairing small departures from orthonormality."""
    b = load_matrix(path)
    dev = orthonormality_error(b)
    if dev <= ORTHONORMAL_TOL:
        return Subspace(b)
    if dev <= SUBSPACE_WARN_TOL:
        return make_subspace(b)
    if dev <= SUBSPACE_REPAIR_TOL:
        logger.warning("%s: basis off orthonormal by %.2e, re-orthonormalizing", path, dev)
        return make_subspace(b)
    raise NotOrthonormal(f"{path}: basis off orthonormal by {dev:.2e} (limit {SUBSPACE_REPAIR_TOL:g})")


def save_labels(path, y) -> None:
    y = np.asarray(y)
    with open(path, "w", newline="\n") as fh:
        fh.write("".join(f"{int(v)}\n" for v in y))


def load_labels(path) -> np.ndarray:
    with open(path) as fh:
        tokens = [t.strip() for t in fh if t.strip()]
    try:
        y = np.array([int(t) for t in tokens], dtype=int)
    except ValueError as exc:
        raise InputError(f"{path}: labels must be integers ({exc})") from exc
    if np.any(y < 0):
        raise InputError(f"{path}: labels must be non-negative")
    return y


def save_split(path, is_train) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("".join("train\n" if t else "test\n" for t in is_train))


def load_split(path) -> np.ndarray:
    """Return a boolean mask, True where the row belongs to the train split."""
    with open(path) as fh:
        tokens = [t.strip() for t in fh if t.strip()]
    bad = sorted(set(tokens) - {"train", "test"})
    if bad:
        raise InputError(f"{path}: unknown split tokens {bad}")
    return np.array([t == "train" for t in tokens], dtype=bool)


def ensure_dir(path) -> None:
    os.makedirs(path, exist_ok=True)
