"""Nodal feature tables, similarity kernels, and magnitude maps.

Features are organized in groups.  Each group is an (n, r_k) column block
with its own similarity kind (how two nodes are compared) and magnitude
kind (how one node's block is reduced to a scalar).  The dyad design
matrix is built from these two reductions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

SIMILARITY_KINDS = ("gaussian", "hamming")
MAGNITUDE_KINDS = ("identity", "euclidean-norm")


@dataclass(frozen=True)
class GroupSpec:
    """Similarity and magnitude kinds for one feature group."""

    similarity: str
    magnitude: str
    name: str = ""

    def __post_init__(self):
        if self.similarity not in SIMILARITY_KINDS:
            raise DataError(
                f"unknown similarity kind {self.similarity!r}; expected one of {SIMILARITY_KINDS}"
            )
        if self.magnitude not in MAGNITUDE_KINDS:
            raise DataError(
                f"unknown magnitude kind {self.magnitude!r}; expected one of {MAGNITUDE_KINDS}"
            )


def _is_binary(values: np.ndarray) -> bool:
    return bool(np.all((values == 0.0) | (values == 1.0)))


@dataclass(frozen=True)
class FeatureTable:
    """Grouped nodal features.

    Parameters
    ----------
    node_ids : tuple of str
        Node identifiers, length n, in canonical order.
    groups : tuple of arrays
        One (n, r_k) float array per feature group.
    specs : tuple of GroupSpec
        Similarity and magnitude kinds, one per group.
    """

    node_ids: tuple
    groups: tuple
    specs: tuple

    def __post_init__(self):
        node_ids = tuple(self.node_ids)
        if len(node_ids) < 2:
            raise DataError("a feature table needs at least 2 nodes")
        if len(set(node_ids)) != len(node_ids):
            raise DataError("node identifiers must be unique")
        if len(self.groups) != len(self.specs):
            raise DataError("groups and specs must have equal length")
        groups = []
        for k, (block, spec) in enumerate(zip(self.groups, self.specs)):
            block = np.asarray(block, dtype=np.float64)
            if block.ndim == 1:
                block = block[:, None]
            if block.ndim != 2 or block.shape[0] != len(node_ids):
                raise DataError(
                    f"feature group {k} must have one row per node "
                    f"(got shape {block.shape} for {len(node_ids)} nodes)"
                )
            if block.shape[1] < 1:
                raise DataError(f"feature group {k} has no columns")
            if not np.all(np.isfinite(block)):
                raise DataError(f"feature group {k} contains missing or non-finite values")
            if spec.similarity == "hamming" and not _is_binary(block):
                raise DataError(
                    f"feature group {k} uses hamming similarity but has entries outside {{0,1}}"
                )
            if spec.magnitude == "identity" and block.shape[1] != 1:
                raise DataError(
                    f"feature group {k} uses identity magnitude but has {block.shape[1]} columns; "
                    "identity requires a single column"
                )
            block = block.copy()
            block.setflags(write=False)
            groups.append(block)
        object.__setattr__(self, "node_ids", node_ids)
        object.__setattr__(self, "groups", tuple(groups))
        object.__setattr__(self, "specs", tuple(self.specs))

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_groups(self) -> int:
        return len(self.groups)


def compute_similarity(a, b, kind: str) -> float:
    """Similarity between two feature blocks of equal length.

    gaussian: exp(-squared Euclidean distance), in (0, 1].
    hamming: 1.0 if the blocks agree elementwise, else 0.0.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DataError(f"similarity inputs have different lengths ({a.size} vs {b.size})")
    if kind == "gaussian":
        d = a - b
        return float(np.exp(-np.dot(d, d)))
    if kind == "hamming":
        if not (_is_binary(a) and _is_binary(b)):
            raise DataError("hamming similarity requires binary inputs")
        return 1.0 if np.array_equal(a, b) else 0.0
    raise DataError(f"unknown similarity kind {kind!r}; expected one of {SIMILARITY_KINDS}")


def similarity_column(block: np.ndarray, pairs: np.ndarray, kind: str) -> np.ndarray:
    """Vectorized similarity for every pair row, same convention as compute_similarity."""
    left = block[pairs[:, 0]]
    right = block[pairs[:, 1]]
    if kind == "gaussian":
        diff = left - right
        return np.exp(-np.einsum("ij,ij->i", diff, diff))
    if kind == "hamming":
        return np.all(left == right, axis=1).astype(np.float64)
    raise DataError(f"unknown similarity kind {kind!r}; expected one of {SIMILARITY_KINDS}")


def magnitude_column(block: np.ndarray, kind: str) -> np.ndarray:
    """Per-node scalar magnitude of one feature group."""
    if kind == "identity":
        if block.shape[1] != 1:
            raise DataError("identity magnitude requires a single-column group")
        return block[:, 0].copy()
    if kind == "euclidean-norm":
        return np.sqrt(np.einsum("ij,ij->i", block, block))
    raise DataError(f"unknown magnitude kind {kind!r}; expected one of {MAGNITUDE_KINDS}")
