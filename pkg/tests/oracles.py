"""Slow, independent reference computations used by the tests.

Nothing in here imports the code under test beyond plain data containers.
"""

import math
import random

import numpy as np


def random_parents(n, rng):
    """Random recursive tree: node v attaches to a uniform earlier node."""
    return [-1] + [rng.randrange(v) for v in range(1, n)]


def rpt_parents(rng, max_nodes=50):
    """Wide, shallow reply tree: many unresponded replies, a few deep threads."""
    parents = [-1]
    n_threads = rng.randint(0, 4)
    for _ in range(n_threads):
        if len(parents) >= max_nodes - 1:
            break
        top = len(parents)
        parents.append(0)
        frontier = [top]
        depth = 1
        while frontier and depth < rng.randint(2, 5):
            nxt = []
            for u in frontier:
                for _ in range(rng.randint(1, 3) if u == top else rng.randint(0, 2)):
                    if len(parents) >= max_nodes:
                        break
                    parents.append(u)
                    nxt.append(len(parents) - 1)
            frontier = nxt
            depth += 1
    while len(parents) < max_nodes and rng.random() < 0.9:
        parents.append(0)
    if len(parents) == 1:
        parents.append(0)
    return parents


def eq_probs(values, rate, delta, p_max):
    """Drop probabilities from importance values, by plain Python arithmetic."""
    s = [math.log(v + delta) for v in values]
    s_max = max(s)
    mean = sum(s) / len(s)
    if all(x == s[0] for x in s):
        return [min(rate, p_max)] * len(s)
    return [min(max((s_max - x) / (s_max - mean) * rate, 0.0), p_max) for x in s]


def node_probs_oracle(centrality, parents, rate, delta, p_max):
    """Root gets the smallest centrality, is exempt, the rest are normalised."""
    phi = list(centrality)
    phi[0] = min(phi)
    return [0.0] + eq_probs(phi[1:], rate, delta, p_max)


def edge_probs_oracle(centrality, parents, rate, delta, p_max):
    phi = list(centrality)
    phi[0] = min(phi)
    w = [(phi[parents[v]] + phi[v]) / 2 for v in range(1, len(parents))]
    return eq_probs(w, rate, delta, p_max)


def pagerank_dense(parents, damping=0.85, direction="bottom_up"):
    """PageRank by a direct linear solve on the dense Google matrix."""
    n = len(parents)
    a = np.zeros((n, n))
    for v in range(1, n):
        if direction == "bottom_up":
            a[v, parents[v]] = 1.0
        elif direction == "top_down":
            a[parents[v], v] = 1.0
        else:
            a[v, parents[v]] = a[parents[v], v] = 1.0
    out = a.sum(axis=1)
    m = np.zeros((n, n))
    for u in range(n):
        if out[u] == 0:
            m[u, :] = 1.0 / n
        else:
            m[u, :] = a[u] / out[u]
    # x = (1-d)/n + d * M^T x
    return np.linalg.solve(np.eye(n) - damping * m.T, np.full(n, (1 - damping) / n))


def betweenness_bruteforce(parents, undirected=False):
    """Ordered pairs (s, t) whose unique tree path has v strictly inside."""
    n = len(parents)

    def path_to_root(v):
        out = [v]
        while parents[out[-1]] != -1:
            out.append(parents[out[-1]])
        return out

    bc = [0] * n
    for s in range(n):
        for t in range(n):
            if s == t:
                continue
            ps, pt = path_to_root(s), path_to_root(t)
            if not undirected and s not in pt:
                continue  # top-down: s must be an ancestor of t
            common = set(ps) & set(pt)
            lca = next(x for x in ps if x in common)
            path = ps[:ps.index(lca) + 1] + pt[:pt.index(lca)][::-1]
            for w in path[1:-1]:
                bc[w] += 1
    return bc


def gcn_dense(features, edges, layers):
    """Forward pass with explicit dense matrices; edges are (src, dst)."""
    n = features.shape[0]
    a = np.eye(n)
    for u, v in edges:
        a[v, u] += 1.0
    a = a / a.sum(axis=1, keepdims=True)
    h = features
    for i, (w, b) in enumerate(layers):
        z = a @ h @ w + b
        h = np.maximum(z, 0) if i < len(layers) - 1 else z
    return h, h.mean(axis=0)


def contrastive_bruteforce(h1, h2, tau=1.0):
    b = len(h1)

    def sim(x, y):
        return float(np.dot(x, y) / (np.linalg.norm(x) * np.linalg.norm(y)))

    total = 0.0
    for i in range(b):
        pos = sim(h1[i], h2[i]) / tau
        row = sum(math.exp(sim(h1[i], h2[j]) / tau) for j in range(b) if j != i) / (b - 1)
        col = sum(math.exp(sim(h1[j], h2[i]) / tau) for j in range(b) if j != i) / (b - 1)
        total += -pos + math.log(row) + math.log(col)
    return total / b


def central_difference(f, x, eps=1e-5):
    """Gradient of scalar ``f`` at array ``x`` (modified in place, restored)."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = x[idx]
        x[idx] = old + eps
        fp = f()
        x[idx] = old - eps
        fm = f()
        x[idx] = old
        g[idx] = (fp - fm) / (2 * eps)
    return g


def rng(seed=0):
    return random.Random(seed)
