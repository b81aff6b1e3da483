"""High-order proximity matrices and the graph Laplacian built from them.

Each view's proximity is a weighted sum of adjacency powers; powers count
multi-hop walks, so densely connected node pairs get large entries. The
per-view matrices are summed across views, and the Laplacian of that sum is
what the trainer uses to keep linked nodes close in embedding space.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .parallel import map_views

# switch matrix powers to dense arithmetic once fill-in passes this fraction
_DENSIFY_AT = 0.5


def default_weights(order):
    """Walk-length weights: 1 for direct edges, halving per extra hop."""
    weights = [1.0]
    for _ in range(order - 1):
        weights.append(0.5 * weights[-1])
    return tuple(weights)


@dataclass
class ProximityConfig:
    order: int = 5
    weights: tuple | None = None
    normalize: bool = False  # scale adjacency by inverse sqrt degrees first

    def resolved_weights(self):
        if self.weights is None:
            return default_weights(self.order)
        weights = tuple(float(w) for w in self.weights)
        if len(weights) != self.order:
            raise ValueError(f"need {self.order} weights, got {len(weights)}")
        if any(w < 0 for w in weights):
            raise ValueError("weights must be nonnegative")
        return weights


@dataclass
class ProximityStack:
    """Per-view proximities, their sum, its degree vector and Laplacian."""
    per_view: list
    aggregate: sp.spmatrix
    degree: np.ndarray
    laplacian: sp.spmatrix


def high_order_proximity(adjacency, config=None):
    """Weighted sum of the first ``order`` powers of the adjacency.

    The input is symmetrized (undirected relations) and kept sparse; the
    power iteration falls back to dense arithmetic when fill-in exceeds
    half the matrix. Diagonal entries of the powers (closed walks) are
    kept: they add nothing to pairwise embedding distances.
    """
    cfg = config or ProximityConfig()
    if cfg.order < 1:
        raise ValueError(f"proximity order must be >= 1, got {cfg.order}")
    weights = cfg.resolved_weights()
    A = sp.csr_matrix(adjacency, dtype=np.float64)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"adjacency must be square, got {A.shape}")
    A = A.maximum(A.T)
    if cfg.normalize:
        deg = np.asarray(A.sum(axis=1)).ravel()
        inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
        D = sp.diags(inv_sqrt)
        A = sp.csr_matrix(D @ A @ D)

    n = A.shape[0]
    total = weights[0] * A
    power = A.copy()
    dense_power = None
    dense_total = None
    dense_A = None
    for w in weights[1:]:
        if dense_power is None and power.nnz > _DENSIFY_AT * n * n:
            dense_power = power.toarray()
            dense_A = A.toarray()
            dense_total = np.zeros((n, n))
        if dense_power is None:
            power = power @ A
            total = total + w * power
        else:
            dense_power = dense_power @ dense_A
            dense_total += w * dense_power
    if dense_total is not None:
        total = total + sp.csr_matrix(dense_total)
    return sp.csr_matrix(total)


def aggregate_and_laplacian(per_view):
    """Sum the per-view proximities and form the Laplacian of the total."""
    per_view = list(per_view)
    if not per_view:
        raise ValueError("need at least one per-view proximity matrix")
    shape = per_view[0].shape
    for s, P in enumerate(per_view):
        if P.shape != shape:
            raise ValueError(f"view {s}: proximity shape {P.shape} != {shape}")
    aggregate = sp.csr_matrix(per_view[0], dtype=np.float64)
    for P in per_view[1:]:
        aggregate = aggregate + sp.csr_matrix(P, dtype=np.float64)
    degree = np.asarray(aggregate.sum(axis=1)).ravel()
    laplacian = sp.csr_matrix(sp.diags(degree) - aggregate)
    return ProximityStack([sp.csr_matrix(P, dtype=np.float64) for P in per_view],
                          aggregate, degree, laplacian)


def build_stack(network, config=None):
    """Per-view proximities for a whole network, then their aggregate."""
    cfg = config or ProximityConfig()
    per_view = map_views(lambda view: high_order_proximity(view.adjacency, cfg),
                         network.views)
    return aggregate_and_laplacian(per_view)
