"""Partial multiplex network data model: types, validation, synthesis, masking.

A multiplex network is one node set observed through several views. Each view
carries its own feature matrix, its own undirected edge set, and a boolean
mask saying which nodes actually have features in that view. Missing rows are
stored as zeros so every matrix expression stays mask-free except where the
mask itself is applied.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


def _per_view(value, t, name):
    """Broadcast a scalar or a length-t sequence into a list of t values."""
    if np.isscalar(value):
        return [value] * t
    values = list(value)
    if len(values) != t:
        raise ValueError(f"{name}: expected a scalar or {t} per-view values, got {len(values)}")
    return values


@dataclass
class ViewData:
    """One view: features (n x dim), presence mask (n,), 0/1 adjacency (n x n).

    Rows of ``features`` where ``mask`` is False must be all zero; the
    adjacency is symmetric with a zero diagonal.
    """
    dim: int
    features: np.ndarray
    mask: np.ndarray
    adjacency: sp.spmatrix

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.mask = np.asarray(self.mask, dtype=bool)
        self.adjacency = sp.csr_matrix(self.adjacency, dtype=np.float64)


@dataclass
class MultiplexNetwork:
    """n nodes seen through t views, with optional per-node class labels."""
    n: int
    t: int
    views: list
    labels: np.ndarray | None = None

    def __post_init__(self):
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)


@dataclass
class SynthConfig:
    """Planted-partition generator settings.

    Nodes are split into balanced communities; each view links same-community
    pairs with probability ``intra`` and other pairs with ``inter``. View
    features are the community's random prototype vector plus Gaussian noise,
    and a fraction ``pdr`` of nodes per view is masked out. All of ``intra``,
    ``inter``, ``noise``, ``pdr`` and ``feature_dim`` accept either a scalar
    or one value per view.
    """
    n: int
    communities: int
    t: int = 2
    intra: object = 0.05
    inter: object = 0.005
    noise: object = 0.1
    pdr: object = 0.0
    feature_dim: object = 32
    seed: int = 0


def validate(network):
    """Check every structural invariant; returns a list of violation strings.

    An empty list means the network is well-formed. Nothing is raised here so
    callers can report all problems at once.
    """
    report = []
    if network.n < 1:
        report.append(f"node count must be >= 1, got {network.n}")
    if network.t < 1:
        report.append(f"view count must be >= 1, got {network.t}")
    if len(network.views) != network.t:
        report.append(f"declared {network.t} views but found {len(network.views)}")
    if network.labels is not None and network.labels.shape != (network.n,):
        report.append(f"labels must have shape ({network.n},), got {network.labels.shape}")
    for s, view in enumerate(network.views):
        if view.features.shape != (network.n, view.dim):
            report.append(
                f"view {s}: features shape {view.features.shape} != ({network.n}, {view.dim})")
            continue
        if view.mask.shape != (network.n,):
            report.append(f"view {s}: mask length {view.mask.shape} != ({network.n},)")
            continue
        if not view.mask.any():
            report.append(f"view {s}: mask has no present node")
        hidden = ~view.mask
        if hidden.any() and np.any(view.features[hidden] != 0.0):
            bad = int(np.flatnonzero(hidden & np.any(view.features != 0.0, axis=1))[0])
            report.append(f"view {s}: masked-out node {bad} has nonzero features")
        adj = view.adjacency
        if adj.shape != (network.n, network.n):
            report.append(f"view {s}: adjacency shape {adj.shape} != square of n")
            continue
        if (adj != adj.T).nnz != 0:
            report.append(f"view {s}: adjacency is not symmetric")
        diag = adj.diagonal()
        if np.any(diag != 0.0):
            report.append(f"view {s}: adjacency has nonzero diagonal (self-loop)")
        if adj.nnz and not np.isin(adj.data, (0.0, 1.0)).all():
            report.append(f"view {s}: adjacency entries must be 0 or 1")
    return report


def _draw_missing(masks, view, count, n, rng):
    """Mask out ``count`` extra nodes in ``view``, keeping every node present somewhere."""
    if count == 0:
        return
    present_elsewhere = np.zeros(n, dtype=np.int64)
    for m in masks:
        present_elsewhere += m
    candidates = np.flatnonzero(masks[view] & (present_elsewhere >= 2))
    if candidates.size < count:
        raise ValueError(
            f"view {view}: cannot mask {count} more nodes while keeping every "
            "node present in at least one view")
    drop = rng.choice(candidates, size=count, replace=False)
    masks[view][drop] = False


def synth_generate(config):
    """Generate a planted-partition multiplex network with ground-truth labels."""
    n, c, t = config.n, config.communities, config.t
    if n < 1 or c < 1 or t < 1:
        raise ValueError("n, communities and t must all be >= 1")
    if c > n:
        raise ValueError(f"more communities ({c}) than nodes ({n})")
    intra = _per_view(config.intra, t, "intra")
    inter = _per_view(config.inter, t, "inter")
    noise = _per_view(config.noise, t, "noise")
    pdr = _per_view(config.pdr, t, "pdr")
    dims = _per_view(config.feature_dim, t, "feature_dim")
    for name, vals, lo, hi in (("intra", intra, 0.0, 1.0), ("inter", inter, 0.0, 1.0)):
        for v in vals:
            if not lo <= v <= hi:
                raise ValueError(f"{name} probability {v} outside [{lo}, {hi}]")
    for r in pdr:
        if not 0.0 <= r < 1.0:
            raise ValueError(f"pdr {r} outside [0, 1)")

    rng = np.random.default_rng(config.seed)
    labels = rng.permutation(np.arange(n) % c)

    # draw all masks first so the at-least-one-view constraint sees every view
    masks = [np.ones(n, dtype=bool) for _ in range(t)]
    for s in range(t):
        missing = int(round(pdr[s] * n))
        if missing >= n:
            raise ValueError(f"view {s}: pdr {pdr[s]} leaves no present node")
        _draw_missing(masks, s, missing, n, rng)

    views = []
    same = labels[:, None] == labels[None, :]
    for s in range(t):
        probs = np.where(same, intra[s], inter[s])
        upper = np.triu(rng.random((n, n)) < probs, k=1)
        adjacency = sp.csr_matrix((upper | upper.T).astype(np.float64))
        prototypes = rng.uniform(0.0, 1.0, size=(c, dims[s]))
        features = prototypes[labels] + noise[s] * rng.standard_normal((n, dims[s]))
        features[~masks[s]] = 0.0
        views.append(ViewData(dims[s], features, masks[s], adjacency))
    return MultiplexNetwork(n, t, views, labels)


def apply_pdr(network, ratio, seed=0):
    """Mask out extra nodes until each view's missing fraction hits ``ratio``.

    Masks only grow: present rows are carried over bitwise, the newly
    masked rows are zeroed, and each node stays present in at least one
    view. Raises if a view already misses more than the requested ratio.
    """
    ratios = _per_view(ratio, network.t, "ratio")
    for r in ratios:
        if not 0.0 <= r < 1.0:
            raise ValueError(f"ratio {r} outside [0, 1)")
    rng = np.random.default_rng(seed)
    masks = [view.mask.copy() for view in network.views]
    views = []
    for s, view in enumerate(network.views):
        target_missing = int(round(ratios[s] * network.n))
        extra = target_missing - int(np.count_nonzero(~masks[s]))
        if extra < 0:
            raise ValueError(
                f"view {s}: already missing more than the requested ratio {ratios[s]}")
        _draw_missing(masks, s, extra, network.n, rng)
        features = view.features.copy()
        features[~masks[s]] = 0.0
        views.append(ViewData(view.dim, features, masks[s], view.adjacency))
    return MultiplexNetwork(network.n, network.t, views, network.labels)


def normalize_features(network):
    """Min-max scale each feature column into [0, 1] over the present rows.

    Returns a copy; masked rows stay zero. Columns that are constant on the
    present rows are left untouched.
    """
    views = []
    for view in network.views:
        features = view.features.copy()
        present = view.mask
        if present.any():
            lo = features[present].min(axis=0)
            hi = features[present].max(axis=0)
            span = hi - lo
            scale = np.where(span > 0, span, 1.0)
            offset = np.where(span > 0, lo, 0.0)
            features[present] = (features[present] - offset) / scale
        views.append(ViewData(view.dim, features, view.mask.copy(), view.adjacency))
    return MultiplexNetwork(network.n, network.t, views, network.labels)
