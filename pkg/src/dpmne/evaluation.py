"""Evaluation harness: classification, clustering, imputation, sweeps, tuning.

Node classification fits an L2-regularized multinomial logistic regression on
a random half of the nodes and scores the rest with micro and macro F1,
averaged over repeated splits. Clustering runs restarted k-means and scores
the best assignment against the labels under an optimal cluster-to-class
matching.
"""

import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .graph_model import MultiplexNetwork, ViewData, apply_pdr
from .optim import armijo_minimize
from .trainer import Hyperparams, train


@dataclass
class EvalProtocol:
    train_fraction: float = 0.5
    repeats: int = 10
    seed: int = 0
    l2: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")


@dataclass
class MetricsReport:
    micro_f1: float
    micro_f1_std: float
    macro_f1: float
    macro_f1_std: float
    clustering_accuracy: float | None = None
    clustering_accuracy_std: float | None = None


@dataclass
class SweepRow:
    ratio: float
    method: str
    report: MetricsReport


def _sample_std(values):
    values = np.asarray(values, dtype=np.float64)
    return float(np.std(values, ddof=1)) if values.size > 1 else 0.0


def micro_macro_f1(y_true, y_pred, num_classes):
    """F1 from pooled counts and the unweighted per-class mean."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    tp = np.zeros(num_classes)
    fp = np.zeros(num_classes)
    fn = np.zeros(num_classes)
    for c in range(num_classes):
        tp[c] = np.sum((y_pred == c) & (y_true == c))
        fp[c] = np.sum((y_pred == c) & (y_true != c))
        fn[c] = np.sum((y_pred != c) & (y_true == c))
    pooled = 2.0 * tp.sum() + fp.sum() + fn.sum()
    micro = 2.0 * tp.sum() / pooled if pooled > 0 else 0.0
    denom = 2.0 * tp + fp + fn
    per_class = np.where(denom > 0, 2.0 * tp / np.where(denom > 0, denom, 1.0), 0.0)
    return float(micro), float(per_class.mean())


def fit_logistic_regression(X, y, num_classes, l2=1.0, gtol=1e-6, max_steps=500):
    """Full-batch multinomial logistic regression with backtracking descent.

    Runs until the gradient max-norm drops below ``gtol`` (or the step
    budget runs out); the bias row is not regularized. Returns the
    (features + 1) x classes weight matrix.
    """
    X = np.asarray(X, dtype=np.float64)
    Xb = np.hstack([X, np.ones((X.shape[0], 1))])
    onehot = np.zeros((X.shape[0], num_classes))
    onehot[np.arange(X.shape[0]), y] = 1.0
    shape = (Xb.shape[1], num_classes)

    def fun(vec):
        W = vec.reshape(shape)
        logits = Xb @ W
        logits -= logits.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(logits).sum(axis=1))
        nll = float(np.sum(log_norm - logits[np.arange(len(y)), y]))
        return nll + 0.5 * l2 * float(np.sum(W[:-1] ** 2))

    def grad(vec):
        W = vec.reshape(shape)
        logits = Xb @ W
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        probs /= probs.sum(axis=1, keepdims=True)
        G = Xb.T @ (probs - onehot)
        G[:-1] += l2 * W[:-1]
        return G.ravel()

    vec, _, _ = armijo_minimize(fun, grad, np.zeros(shape).ravel(),
                                steps=max_steps, step0=1.0, gtol=gtol)
    return vec.reshape(shape)


def predict_logistic(W, X):
    Xb = np.hstack([np.asarray(X, dtype=np.float64), np.ones((X.shape[0], 1))])
    return np.argmax(Xb @ W, axis=1)


def _split_with_all_classes(rng, labels, train_fraction, num_classes, max_tries=100):
    n = labels.shape[0]
    n_train = int(round(train_fraction * n))
    n_train = min(max(n_train, 1), n - 1)
    for _ in range(max_tries):
        perm = rng.permutation(n)
        train_idx, test_idx = perm[:n_train], perm[n_train:]
        if np.unique(labels[train_idx]).size == num_classes:
            return train_idx, test_idx
    raise RuntimeError("could not draw a training split containing every class")


def classify_f1(embeddings, labels, protocol=None):
    """Mean and std of micro/macro F1 over repeated random splits."""
    protocol = protocol or EvalProtocol()
    embeddings = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    classes, y = np.unique(labels, return_inverse=True)
    children = np.random.SeedSequence(protocol.seed).spawn(protocol.repeats)
    micro, macro = [], []
    for child in children:
        rng = np.random.default_rng(child)
        train_idx, test_idx = _split_with_all_classes(
            rng, y, protocol.train_fraction, classes.size)
        W = fit_logistic_regression(embeddings[train_idx], y[train_idx],
                                    classes.size, l2=protocol.l2)
        pred = predict_logistic(W, embeddings[test_idx])
        mi, ma = micro_macro_f1(y[test_idx], pred, classes.size)
        micro.append(mi)
        macro.append(ma)
    return MetricsReport(float(np.mean(micro)), _sample_std(micro),
                         float(np.mean(macro)), _sample_std(macro))


def _kmeans_single(X, k, rng, max_iter=300, tol=1e-6):
    n = X.shape[0]
    sq = np.sum(X * X, axis=1)
    # k-means++ seeding
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total <= 0:
            centers[j] = X[rng.integers(n)]
        else:
            centers[j] = X[rng.choice(n, p=closest / total)]
        closest = np.minimum(closest, np.sum((X - centers[j]) ** 2, axis=1))

    inertia = np.inf
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        dists = sq[:, None] - 2.0 * (X @ centers.T) + np.sum(centers * centers, axis=1)
        labels = np.argmin(dists, axis=1)
        point_cost = dists[np.arange(n), labels]
        for j in range(k):
            members = labels == j
            if members.any():
                centers[j] = X[members].mean(axis=0)
            else:
                # re-seed an emptied centroid at the currently worst-fit point
                far = int(np.argmax(point_cost))
                centers[j] = X[far]
                labels[far] = j
                point_cost[far] = 0.0
        new_inertia = float(np.sum((X - centers[labels]) ** 2))
        if inertia - new_inertia <= tol * max(inertia, 1e-300) and np.isfinite(inertia):
            inertia = new_inertia
            break
        inertia = new_inertia
    return labels, inertia


def kmeans(X, k, seed=0, restarts=10, max_iter=300, tol=1e-6):
    """Best-of-``restarts`` Lloyd iterations with plus-plus seeding."""
    X = np.asarray(X, dtype=np.float64)
    rng = np.random.default_rng(seed)
    best_labels, best_inertia = None, np.inf
    for _ in range(restarts):
        labels, inertia = _kmeans_single(X, k, rng, max_iter, tol)
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return best_labels


def matched_accuracy(cluster_ids, labels):
    """Fraction correct under the best cluster-to-class assignment."""
    cluster_ids = np.asarray(cluster_ids)
    labels = np.asarray(labels)
    uc = np.unique(cluster_ids)
    ul = np.unique(labels)
    table = np.zeros((uc.size, ul.size))
    for i, c in enumerate(uc):
        for j, l in enumerate(ul):
            table[i, j] = np.sum((cluster_ids == c) & (labels == l))
    rows, cols = linear_sum_assignment(-table)
    return float(table[rows, cols].sum() / labels.size)


def cluster_accuracy(embeddings, labels, num_clusters, seed=0):
    """k-means the embeddings and score against labels with optimal matching."""
    cluster_ids = kmeans(embeddings, num_clusters, seed=seed)
    return matched_accuracy(cluster_ids, labels)


def knn_impute(network, k=5):
    """Fill each missing feature row from its most similar present nodes.

    Similarity between two nodes is the cosine over the concatenation of the
    views where both are present. The k best comparable nodes present in the
    target view contribute a similarity-weighted average. Nodes with no
    usable neighbor fall back to zero fill and trigger a warning. All masks
    come back True; present rows are untouched.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n, t = network.n, network.t
    masks = [view.mask for view in network.views]
    dots = [view.features @ view.features.T for view in network.views]
    sqnorms = [np.sum(view.features ** 2, axis=1) for view in network.views]

    fallbacks = []
    views = []
    for s, view in enumerate(network.views):
        features = view.features.copy()
        for i in np.flatnonzero(~masks[s]):
            shared = [v for v in range(t) if masks[v][i]]
            numer = np.zeros(n)
            sq_i = np.zeros(n)
            sq_j = np.zeros(n)
            overlap = np.zeros(n, dtype=bool)
            for v in shared:
                both = masks[v]
                numer += np.where(both, dots[v][i], 0.0)
                sq_i += np.where(both, sqnorms[v][i], 0.0)
                sq_j += np.where(both, sqnorms[v], 0.0)
                overlap |= both
            usable = masks[s] & overlap & (sq_i > 0) & (sq_j > 0)
            usable[i] = False
            sims = np.zeros(n)
            sims[usable] = numer[usable] / np.sqrt(sq_i[usable] * sq_j[usable])
            order = np.argsort(-sims, kind="stable")
            top = [j for j in order if usable[j]][:k]
            weight = sims[top].sum() if top else 0.0
            if weight <= 1e-12:
                fallbacks.append((s, int(i)))
                continue
            features[i] = sims[top] @ view.features[top] / weight
        views.append(ViewData(view.dim, features, np.ones(n, dtype=bool), view.adjacency))
    if fallbacks:
        warnings.warn(f"knn_impute: zero-filled {len(fallbacks)} rows with no "
                      f"comparable neighbor: {fallbacks}")
    return MultiplexNetwork(n, t, views, network.labels)


def _unmask_all(network):
    """Treat every node as present (features keep whatever fill they have)."""
    views = [ViewData(v.dim, v.features.copy(), np.ones(network.n, dtype=bool), v.adjacency)
             for v in network.views]
    return MultiplexNetwork(network.n, network.t, views, network.labels)


SWEEP_METHODS = ("dpmne", "zero-fill", "knn-fill")


def pdr_sweep(network, ratios, methods=SWEEP_METHODS, protocol=None, hyper=None):
    """Classification metrics per (missing ratio, method) pair.

    Each ratio gets one masked copy of the network, shared by all methods:
    the mask-aware model trains on it directly, while the fill variants
    erase the masks after zero or neighbor fill. Deterministic in the
    protocol seed.
    """
    protocol = protocol or EvalProtocol()
    hyper = hyper if hyper is not None else Hyperparams()
    ratios = list(ratios)
    if sorted(ratios) != ratios:
        raise ValueError("ratios must be sorted ascending")
    unknown = [m for m in methods if m not in SWEEP_METHODS]
    if unknown:
        raise ValueError(f"unknown methods {unknown}; choose from {SWEEP_METHODS}")
    if network.labels is None:
        raise ValueError("pdr_sweep needs node labels")

    rows = []
    for idx, ratio in enumerate(ratios):
        masked = apply_pdr(network, ratio, seed=protocol.seed + 7919 * idx)
        for method in methods:
            if method == "dpmne":
                source = masked
            elif method == "zero-fill":
                source = _unmask_all(masked)
            else:
                source = knn_impute(masked)
            run_hyper = replace(hyper, seed=protocol.seed)
            state = train(source, run_hyper)
            rows.append(SweepRow(ratio, method, classify_f1(state.Y, network.labels, protocol)))
    return rows


def kfold_indices(n, folds, rng):
    """Disjoint folds covering 0..n-1 exactly once."""
    if folds < 2 or folds > n:
        raise ValueError(f"folds must be in [2, {n}], got {folds}")
    return np.array_split(rng.permutation(n), folds)


def cross_validate(network, grid, folds=5, protocol=None, base_hyper=None):
    """Pick the (alpha, beta, lam) grid point with the best mean fold micro-F1.

    The embedding is learned once per grid point (training never sees
    labels); only the downstream classifier is cross-validated. Ties keep
    the earliest grid point.
    """
    protocol = protocol or EvalProtocol()
    base_hyper = base_hyper if base_hyper is not None else Hyperparams()
    if network.labels is None:
        raise ValueError("cross_validate needs node labels")
    points = [dict(zip(("alpha", "beta", "lam"), p)) if not isinstance(p, dict) else p
              for p in grid]
    if not points:
        raise ValueError("empty hyperparameter grid")
    classes, y = np.unique(network.labels, return_inverse=True)
    rng = np.random.default_rng(protocol.seed)
    fold_sets = kfold_indices(network.n, folds, rng)

    best_score, best_hyper = -np.inf, None
    for point in points:
        hyper = replace(base_hyper, seed=protocol.seed, **point)
        state = train(network, hyper)
        scores = []
        for f in range(folds):
            test_idx = fold_sets[f]
            train_idx = np.concatenate([fold_sets[g] for g in range(folds) if g != f])
            W = fit_logistic_regression(state.Y[train_idx], y[train_idx],
                                        classes.size, l2=protocol.l2)
            pred = predict_logistic(W, state.Y[test_idx])
            scores.append(micro_macro_f1(y[test_idx], pred, classes.size)[0])
        score = float(np.mean(scores))
        if score > best_score:
            best_score, best_hyper = score, hyper
    return best_hyper
