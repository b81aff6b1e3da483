"""Loader for the public citation benchmark layout (content + cites files).

Builds a two-view network: a citation view whose features are the rows of
the symmetrized citation adjacency, and an attribute view whose features are
the 0/1 word vectors, with an edge between two documents that share at least
one attribute.
"""

import numpy as np
import scipy.sparse as sp

from .graph_model import MultiplexNetwork, ViewData


def load_citation_network(content_path, cites_path):
    ids = []
    words = []
    label_names = []
    with open(content_path, "r", encoding="utf-8") as fh:
        for line in fh.read().splitlines():
            if not line:
                continue
            tokens = line.split("\t")
            ids.append(tokens[0])
            words.append([float(tok) for tok in tokens[1:-1]])
            label_names.append(tokens[-1])
    n = len(ids)
    index = {doc: i for i, doc in enumerate(ids)}
    attributes = np.asarray(words, dtype=np.float64)
    classes = sorted(set(label_names))
    labels = np.asarray([classes.index(name) for name in label_names], dtype=np.int64)

    cite = sp.lil_matrix((n, n))
    with open(cites_path, "r", encoding="utf-8") as fh:
        for line in fh.read().splitlines():
            if not line:
                continue
            a, b = line.split("\t")
            if a in index and b in index and a != b:
                cite[index[a], index[b]] = 1.0
                cite[index[b], index[a]] = 1.0
    cite = sp.csr_matrix(cite)

    # attribute view: linked when two documents share at least one attribute
    attr_sparse = sp.csr_matrix(attributes)
    shared = attr_sparse @ attr_sparse.T
    shared.setdiag(0)
    shared.eliminate_zeros()
    attr_adj = sp.csr_matrix((np.ones_like(shared.data), shared.indices, shared.indptr),
                             shape=shared.shape)

    mask = np.ones(n, dtype=bool)
    views = [ViewData(n, cite.toarray(), mask.copy(), cite),
             ViewData(attributes.shape[1], attributes, mask.copy(), attr_adj)]
    return MultiplexNetwork(n, 2, views, labels)
