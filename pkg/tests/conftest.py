import numpy as np
import pytest
import scipy.sparse as sp

from dpmne.graph_model import MultiplexNetwork, ViewData


def make_view(features, mask, edges, n):
    features = np.asarray(features, dtype=np.float64)
    adj = sp.lil_matrix((n, n))
    for u, v in edges:
        adj[u, v] = 1.0
        adj[v, u] = 1.0
    return ViewData(features.shape[1], features, np.asarray(mask, dtype=bool),
                    sp.csr_matrix(adj))


@pytest.fixture
def tiny_network():
    """Well-formed 3-node, 2-view network with one masked row in view 1."""
    view0 = make_view([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
                      [True, True, True], [(0, 1), (1, 2)], 3)
    view1 = make_view([[0.5], [0.0], [0.25]],
                      [True, False, True], [(0, 2)], 3)
    return MultiplexNetwork(3, 2, [view0, view1])


def random_network(seed, n=12, t=2, dims=(5, 4), missing=(0.25, 0.25), edge_p=0.3,
                   labels=False):
    """Small random network for property checks; every node present somewhere."""
    rng = np.random.default_rng(seed)
    views = []
    masks = [np.ones(n, dtype=bool) for _ in range(t)]
    for s in range(t):
        count = int(missing[s] * n)
        present_elsewhere = np.sum(masks, axis=0)
        candidates = np.flatnonzero(masks[s] & (present_elsewhere >= 2))
        drop = rng.choice(candidates, size=min(count, candidates.size), replace=False)
        masks[s][drop] = False
    for s in range(t):
        features = rng.random((n, dims[s]))
        features[~masks[s]] = 0.0
        upper = np.triu(rng.random((n, n)) < edge_p, k=1)
        adj = sp.csr_matrix((upper | upper.T).astype(np.float64))
        views.append(ViewData(dims[s], features, masks[s], adj))
    lab = rng.integers(0, 3, size=n) if labels else None
    return MultiplexNetwork(n, t, views, lab)
