"""Dyad-level probability model for directed networks.

Every unordered node pair (a dyad) is in one of four states:

    1: both edges present   2: only the forward edge (j1 -> j2)
    3: only the reverse edge (j2 -> j1)   4: no edge

Given nodal features, dyads are independent and each state has an
exponential-family weight exp(Z_c . theta), where the Z_c are fixed
per-pair covariate vectors assembled from similarity and magnitude
columns.  State 4 is the reference with log-weight 0.  This module
builds the per-pair design, evaluates state probabilities, and provides
the log-likelihood, score, and observed information used by the fitters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DataError, NumericError
from .features import FeatureTable, magnitude_column, similarity_column
from .params import ParamVector, param_length


class DesignRow(NamedTuple):
    """Covariates of a single pair: similarity and both magnitude vectors."""

    w: np.ndarray
    g1: np.ndarray
    g2: np.ndarray


@dataclass(frozen=True)
class DyadDesign:
    """Per-pair covariates for all N = n(n-1)/2 unordered pairs.

    pairs holds node indices (j1, j2) with j1 < j2 in lexicographic
    order; w, g1, g2 are (N, m) with one column per feature group.
    The stacked state covariate vectors Z_c are precomputed once and
    shared read-only by every likelihood evaluation.
    """

    pairs: np.ndarray
    w: np.ndarray
    g1: np.ndarray
    g2: np.ndarray

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64)
        w = np.asarray(self.w, dtype=np.float64)
        g1 = np.asarray(self.g1, dtype=np.float64)
        g2 = np.asarray(self.g2, dtype=np.float64)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise DataError("pairs must be an (N, 2) index array")
        n_pairs = pairs.shape[0]
        for name, arr in (("w", w), ("g1", g1), ("g2", g2)):
            if arr.shape != (n_pairs, w.shape[1]):
                raise DataError(f"{name} must have shape (N, m) matching pairs")
            if not np.all(np.isfinite(arr)):
                raise DataError(f"{name} contains non-finite values")
        for arr in (pairs, w, g1, g2):
            arr.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "g1", g1)
        object.__setattr__(self, "g2", g2)
        object.__setattr__(self, "_zstack", _build_zstack(w, g1, g2))

    @property
    def n_pairs(self) -> int:
        return self.pairs.shape[0]

    @property
    def n_groups(self) -> int:
        return self.w.shape[1]

    @property
    def n_params(self) -> int:
        return param_length(self.n_groups)

    @property
    def zstack(self) -> np.ndarray:
        """State covariates, shape (3, N, p); state 4 is implicitly zero."""
        return self._zstack

    @property
    def zflat(self) -> np.ndarray:
        """zstack reshaped to (3N, p) for matrix-vector products."""
        return self._zstack.reshape(3 * self.n_pairs, self.n_params)

    def row(self, i: int) -> DesignRow:
        return DesignRow(self.w[i], self.g1[i], self.g2[i])


def _build_zstack(w, g1, g2) -> np.ndarray:
    n_pairs, m = w.shape
    p = param_length(m)
    z = np.zeros((3, n_pairs, p))
    gsum = g1 + g2
    # state 1 (mutual): reciprocity 1, two edges, doubled similarity,
    # both nodes send and receive
    z[0, :, 0] = 1.0
    z[0, :, 1] = 2.0
    z[0, :, 2 : 2 + m] = 2.0 * w
    z[0, :, 2 + m : 2 + 2 * m] = gsum
    z[0, :, 2 + 2 * m :] = gsum
    # state 2: single edge j1 -> j2
    z[1, :, 1] = 1.0
    z[1, :, 2 : 2 + m] = w
    z[1, :, 2 + m : 2 + 2 * m] = g1
    z[1, :, 2 + 2 * m :] = g2
    # state 3: single edge j2 -> j1
    z[2, :, 1] = 1.0
    z[2, :, 2 : 2 + m] = w
    z[2, :, 2 + m : 2 + 2 * m] = g2
    z[2, :, 2 + 2 * m :] = g1
    z.setflags(write=False)
    return z


def build_dyad_design(features: FeatureTable) -> DyadDesign:
    """Assemble the per-pair design from a feature table.

    Pairs are enumerated in lexicographic order of node indices.  For
    each group, w is the pairwise similarity and g1/g2 the magnitudes of
    the lower- and higher-indexed node.
    """
    n = features.n_nodes
    j1, j2 = np.triu_indices(n, k=1)
    pairs = np.column_stack([j1, j2])
    w_cols, g_cols = [], []
    for block, spec in zip(features.groups, features.specs):
        w_cols.append(similarity_column(block, pairs, spec.similarity))
        g_cols.append(magnitude_column(block, spec.magnitude))
    w = np.column_stack(w_cols)
    g = np.column_stack(g_cols)
    return DyadDesign(pairs=pairs, w=w, g1=g[j1], g2=g[j2])


def _theta_array(theta, p: int) -> np.ndarray:
    if isinstance(theta, ParamVector):
        arr = theta.theta
    else:
        arr = np.asarray(theta, dtype=np.float64)
    if arr.shape != (p,):
        raise DataError(f"parameter vector has shape {arr.shape}, expected ({p},)")
    if not np.all(np.isfinite(arr)):
        raise DataError("parameter vector contains non-finite entries")
    return arr


def category_log_weight(design_row: DesignRow, theta, c: int) -> float:
    """Log-weight Z_c . theta of one dyad state, 0 for the empty state."""
    if c not in (1, 2, 3, 4):
        raise DataError(f"dyad state must be in 1..4, got {c}")
    if c == 4:
        return 0.0
    w, g1, g2 = design_row
    m = w.shape[0]
    th = _theta_array(theta, param_length(m))
    gamma = th[2 : 2 + m]
    zeta = th[2 + m : 2 + 2 * m]
    eta = th[2 + 2 * m :]
    if c == 1:
        gsum = g1 + g2
        return float(th[0] + 2.0 * th[1] + 2.0 * (w @ gamma) + gsum @ zeta + gsum @ eta)
    if c == 2:
        return float(th[1] + w @ gamma + g1 @ zeta + g2 @ eta)
    return float(th[1] + w @ gamma + g2 @ zeta + g1 @ eta)


def dyad_probabilities(design_row: DesignRow, theta) -> np.ndarray:
    """Probabilities of the four states of one dyad.

    Evaluated by log-sum-exp with the maximum log-weight subtracted, so
    the result is finite and sums to 1 whenever the log-weights are
    finite.
    """
    logits = np.array(
        [category_log_weight(design_row, theta, c) for c in (1, 2, 3, 4)]
    )
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite dyad log-weight; covariates or theta overflow")
    mx = logits.max()
    e = np.exp(logits - mx)
    return e / e.sum()


def _category_logits(design: DyadDesign, theta_arr: np.ndarray) -> np.ndarray:
    """Log-weights of states 1..3 for every pair, shape (3, N)."""
    flat = design.zflat @ theta_arr
    return flat.reshape(3, design.n_pairs)


def _lse_and_probs(logits: np.ndarray):
    """Per-pair log normalizer and state 1..3 probabilities.

    The state-4 log-weight 0 participates through max(logits, 0).
    """
    mx = np.maximum(logits.max(axis=0), 0.0)
    shifted = np.exp(logits - mx)
    denom = shifted.sum(axis=0) + np.exp(-mx)
    lse = np.log(denom) + mx
    probs = shifted / denom
    return lse, probs


def dyad_probability_matrix(design: DyadDesign, theta) -> np.ndarray:
    """State probabilities for every pair, shape (N, 4)."""
    th = _theta_array(theta, design.n_params)
    logits = _category_logits(design, th)
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite dyad log-weight; covariates or theta overflow")
    lse, probs = _lse_and_probs(logits)
    p4 = np.exp(-lse)
    return np.column_stack([probs[0], probs[1], probs[2], p4])


def validate_categories(y, design: DyadDesign) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (design.n_pairs,):
        raise DataError(
            f"dyad state vector has shape {y.shape}, expected ({design.n_pairs},)"
        )
    y = y.astype(np.int64)
    if y.min(initial=1) < 1 or y.max(initial=4) > 4:
        raise DataError("dyad states must lie in {1, 2, 3, 4}")
    return y


def dyads_from_adjacency(adjacency) -> np.ndarray:
    """Collapse a binary adjacency matrix to per-pair states in pair order."""
    adj = np.asarray(adjacency)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise DataError("adjacency must be a square matrix")
    if not np.all((adj == 0) | (adj == 1)):
        raise DataError("adjacency entries must be 0 or 1")
    if np.any(np.diag(adj) != 0):
        raise DataError("adjacency has nonzero diagonal (self-loops are not allowed)")
    j1, j2 = np.triu_indices(adj.shape[0], k=1)
    fwd = adj[j1, j2].astype(np.int64)
    rev = adj[j2, j1].astype(np.int64)
    return 4 - 2 * fwd - rev


def adjacency_from_dyads(y, n: int) -> np.ndarray:
    """Inverse of dyads_from_adjacency for n nodes."""
    j1, j2 = np.triu_indices(n, k=1)
    y = np.asarray(y, dtype=np.int64)
    if y.shape != j1.shape:
        raise DataError("dyad state vector length does not match node count")
    adj = np.zeros((n, n), dtype=np.int64)
    adj[j1, j2] = (y == 1) | (y == 2)
    adj[j2, j1] = (y == 1) | (y == 3)
    return adj


@dataclass(frozen=True)
class SufficientStats:
    """Network statistics s with the ParamVector block layout."""

    s: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=np.float64)
        s.setflags(write=False)
        object.__setattr__(self, "s", s)

    @property
    def reciprocity_count(self) -> float:
        return float(self.s[0])

    @property
    def edge_count(self) -> float:
        return float(self.s[1])


def sufficient_statistics(y, design: DyadDesign) -> SufficientStats:
    """Sufficient statistics of an observed network.

    s[0] counts mutual pairs, s[1] directed edges; homophily columns add
    w once per directed edge (so mutual pairs contribute 2w), and the
    out/in columns add the sender's and receiver's magnitudes per edge.
    """
    y = validate_categories(y, design)
    indicators = np.stack([(y == c).astype(np.float64) for c in (1, 2, 3)])
    s = design.zflat.T @ indicators.ravel()
    return SufficientStats(s)


def log_likelihood(y, design: DyadDesign, theta) -> float:
    """Sum over pairs of the log-probability of the observed state."""
    y = validate_categories(y, design)
    th = _theta_array(theta, design.n_params)
    logits = _category_logits(design, th)
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite dyad log-weight; covariates or theta overflow")
    lse, _ = _lse_and_probs(logits)
    idx = np.arange(design.n_pairs)
    observed_logit = np.where(y == 4, 0.0, logits[np.minimum(y, 3) - 1, idx])
    return float(np.sum(observed_logit - lse))


def score(y, design: DyadDesign, theta) -> np.ndarray:
    """Gradient of the log-likelihood in theta."""
    y = validate_categories(y, design)
    th = _theta_array(theta, design.n_params)
    logits = _category_logits(design, th)
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite dyad log-weight; covariates or theta overflow")
    _, probs = _lse_and_probs(logits)
    indicators = np.stack([(y == c).astype(np.float64) for c in (1, 2, 3)])
    return design.zflat.T @ (indicators - probs).ravel()


def observed_information(design: DyadDesign, theta) -> np.ndarray:
    """Negative Hessian of the log-likelihood; symmetric PSD."""
    th = _theta_array(theta, design.n_params)
    logits = _category_logits(design, th)
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite dyad log-weight; covariates or theta overflow")
    _, probs = _lse_and_probs(logits)
    zflat = design.zflat
    weighted = zflat * probs.reshape(-1)[:, None]
    second = zflat.T @ weighted
    mean_z = np.einsum("cn,cnp->np", probs, design.zstack)
    outer = mean_z.T @ mean_z
    info = second - outer
    return 0.5 * (info + info.T)
