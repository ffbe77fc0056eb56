"""Exhaustive ground truth for tiny networks.

Enumerates every directed graph on up to 4 nodes, computes each graph's
unnormalized log-weight from the global exponential-family density, and
normalizes by brute force.  Sufficient statistics, similarities, and
magnitudes are recomputed here from first principles, on purpose: this
module must not share code paths with the model it validates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .features import FeatureTable
from .params import ParamVector, param_length

_MAX_NODES = 4


def enumerate_graphs(n: int) -> list:
    """All 2^(n(n-1)) binary adjacency matrices with zero diagonal.

    Off-diagonal cells are filled from the bits of the graph index in
    row-major cell order, least significant bit first, so the order is
    deterministic.
    """
    if not 2 <= n <= _MAX_NODES:
        raise DataError(f"enumeration supports 2 <= n <= {_MAX_NODES}, got {n}")
    cells = [(i, j) for i in range(n) for j in range(n) if i != j]
    count = 1 << len(cells)
    graphs = []
    for g in range(count):
        adj = np.zeros((n, n), dtype=np.int64)
        for b, (i, j) in enumerate(cells):
            adj[i, j] = (g >> b) & 1
        graphs.append(adj)
    return graphs


def _pairwise_similarity(block: np.ndarray, kind: str) -> np.ndarray:
    """(n, n) similarity matrix of one feature group, zero diagonal unused."""
    n = block.shape[0]
    sim = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if kind == "gaussian":
                d = block[i] - block[j]
                sim[i, j] = np.exp(-float(np.dot(d, d)))
            elif kind == "hamming":
                sim[i, j] = 1.0 if bool(np.all(block[i] == block[j])) else 0.0
            else:
                raise DataError(f"unknown similarity kind {kind!r}")
    return sim


def _node_magnitudes(block: np.ndarray, kind: str) -> np.ndarray:
    if kind == "identity":
        return block[:, 0].astype(np.float64)
    if kind == "euclidean-norm":
        return np.array([float(np.sqrt(np.dot(row, row))) for row in block])
    raise DataError(f"unknown magnitude kind {kind!r}")


def graph_statistics(adj: np.ndarray, features: FeatureTable) -> np.ndarray:
    """Sufficient statistic vector of one graph, computed by direct sums.

    Layout matches ParamVector: mutual-pair count, directed edge count,
    then per-group homophily, out-effect, and in-effect sums over all
    ordered pairs with an edge.
    """
    n = features.n_nodes
    m = features.n_groups
    adj = np.asarray(adj)
    s = np.zeros(param_length(m))
    for j1 in range(n):
        for j2 in range(j1 + 1, n):
            s[0] += adj[j1, j2] * adj[j2, j1]
    s[1] = float(adj.sum())
    for k, (block, spec) in enumerate(zip(features.groups, features.specs)):
        sim = _pairwise_similarity(block, spec.similarity)
        mag = _node_magnitudes(block, spec.magnitude)
        hom = out_sum = in_sum = 0.0
        for i in range(n):
            for j in range(n):
                if i == j or adj[i, j] == 0:
                    continue
                hom += sim[i, j]
                out_sum += mag[i]
                in_sum += mag[j]
        s[2 + k] = hom
        s[2 + m + k] = out_sum
        s[2 + 2 * m + k] = in_sum
    return s


@dataclass(frozen=True)
class GraphEnumeration:
    """Every graph on n nodes with its log-weight and the log normalizer."""

    n: int
    graphs: tuple
    log_weights: np.ndarray
    log_z: float

    @property
    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_weights - self.log_z)


def _theta_array(theta, features: FeatureTable) -> np.ndarray:
    if isinstance(theta, ParamVector):
        theta = theta.theta
    theta = np.asarray(theta, dtype=np.float64)
    expected = param_length(features.n_groups)
    if theta.shape != (expected,):
        raise DataError(f"theta has shape {theta.shape}, expected ({expected},)")
    return theta


def enumerate_distribution(theta, features: FeatureTable) -> GraphEnumeration:
    """Full distribution over graphs by exhaustive enumeration."""
    th = _theta_array(theta, features)
    graphs = enumerate_graphs(features.n_nodes)
    log_weights = np.array([graph_statistics(adj, features) @ th for adj in graphs])
    mx = log_weights.max()
    log_z = float(mx + np.log(np.exp(log_weights - mx).sum()))
    return GraphEnumeration(
        n=features.n_nodes,
        graphs=tuple(graphs),
        log_weights=log_weights,
        log_z=log_z,
    )


def brute_force_graph_probability(adj, theta, features: FeatureTable) -> float:
    """Probability of one graph under the exhaustively normalized density."""
    adj = np.asarray(adj)
    enum = enumerate_distribution(theta, features)
    th = _theta_array(theta, features)
    return float(np.exp(graph_statistics(adj, features) @ th - enum.log_z))


def brute_force_dyad_marginal(theta, features: FeatureTable, pair) -> np.ndarray:
    """Marginal state distribution of one pair, by summing graph probabilities."""
    j1, j2 = pair
    n = features.n_nodes
    if not (0 <= j1 < n and 0 <= j2 < n and j1 != j2):
        raise DataError(f"invalid pair {pair!r} for {n} nodes")
    enum = enumerate_distribution(theta, features)
    probs = enum.probabilities
    marginal = np.zeros(4)
    for adj, prob in zip(enum.graphs, probs):
        state = 4 - 2 * adj[j1, j2] - adj[j2, j1]
        marginal[state - 1] += prob
    return marginal
