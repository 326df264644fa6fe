import networkx as nx
import numpy as np
import pytest

from oracles import betweenness_bruteforce, pagerank_dense, random_parents, rng, rpt_parents
from rptcl.centrality import (Centrality, CentralityMeasure, ConvergenceError, check_principles,
                              compute_centrality, edge_importance, root_min_adjust)
from rptcl.tree import tree_from_parents

CHAIN4 = tree_from_parents([-1, 0, 1, 2])       # root -> a -> b -> c
FORK = tree_from_parents([-1, 0, 0, 1])         # root -> {a, b}, a -> c
# root -> p -> c, and c has seven leaf replies
HEAVY_CHILD = tree_from_parents([-1, 0, 1] + [2] * 7)


def _scores(tree, kind, **kw):
    return compute_centrality(tree, CentralityMeasure(kind, **kw))


def _graph(parents, directed_down=True, undirected=False):
    g = nx.Graph() if undirected else nx.DiGraph()
    g.add_nodes_from(range(len(parents)))
    for v in range(1, len(parents)):
        g.add_edge(*((parents[v], v) if directed_down else (v, parents[v])))
    return g


def test_degree_on_chain():
    assert _scores(CHAIN4, "degree").values.tolist() == [1, 1, 1, 0]


def test_betweenness_on_chain_is_level_times_descendants():
    assert _scores(CHAIN4, "betweenness").values.tolist() == [0, 2, 2, 0]


def test_pagerank_on_fork_matches_dense_solve():
    np.testing.assert_allclose(_scores(FORK, "pagerank").values, pagerank_dense([-1, 0, 0, 1]),
                               rtol=0, atol=1e-10)


@pytest.mark.parametrize("seed", range(15))
def test_pagerank_against_dense_oracle(seed):
    r = rng(seed)
    parents = random_parents(r.randint(1, 50), r)
    t = tree_from_parents(parents)
    for direction in ("bottom_up", "top_down", "undirected"):
        got = _scores(t, "pagerank", direction=direction).values
        np.testing.assert_allclose(got, pagerank_dense(parents, direction=direction), atol=1e-10)
        assert got.sum() == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("seed", range(15))
def test_betweenness_against_bruteforce(seed):
    r = rng(100 + seed)
    parents = random_parents(r.randint(1, 30), r)
    t = tree_from_parents(parents)
    assert _scores(t, "betweenness").values.tolist() == betweenness_bruteforce(parents)
    und = _scores(t, "betweenness", direction="undirected").values
    assert und.tolist() == betweenness_bruteforce(parents, undirected=True)


@pytest.mark.parametrize("seed", range(10))
def test_library_measures_agree_with_networkx(seed):
    r = rng(200 + seed)
    parents = random_parents(r.randint(2, 40), r)
    t = tree_from_parents(parents)
    und = _graph(parents, undirected=True)
    n = len(parents)

    def as_array(d):
        return np.array([d[i] for i in range(n)])

    np.testing.assert_allclose(_scores(t, "closeness").values,
                               as_array(nx.closeness_centrality(und)), atol=1e-12)
    np.testing.assert_allclose(
        _scores(t, "katz").values,
        as_array(nx.katz_centrality_numpy(und, alpha=0.05, beta=1.0, normalized=False)),
        atol=1e-10)
    np.testing.assert_allclose(_scores(t, "eigenvector").values,
                               as_array(nx.eigenvector_centrality(und, max_iter=100000, tol=1e-13)),
                               atol=1e-6)
    down = _graph(parents)
    bc = nx.betweenness_centrality(down, normalized=False)
    np.testing.assert_allclose(_scores(t, "betweenness").values, as_array(bc))
    np.testing.assert_allclose(_scores(t, "degree").values,
                               as_array(dict(down.out_degree())))


def test_closeness_uses_incoming_distances_on_directed_views():
    # on the top-down chain only ancestors reach a node
    got = _scores(CHAIN4, "closeness", direction="top_down").values
    want = nx.closeness_centrality(_graph([-1, 0, 1, 2]))
    np.testing.assert_allclose(got, [want[i] for i in range(4)])


def test_single_node_tree():
    t = tree_from_parents([-1])
    for kind in Centrality:
        assert compute_centrality(t, CentralityMeasure(kind)).values.shape == (1,)


def test_iteration_cap_raises():
    with pytest.raises(ConvergenceError):
        _scores(FORK, "pagerank", max_iter=2)


def test_katz_divergence_is_reported():
    star = tree_from_parents([-1] + [0] * 500)
    with pytest.raises(ConvergenceError, match="diverges"):
        _scores(star, "katz")


def test_scores_carry_timing_and_are_read_only():
    s = _scores(FORK, "degree")
    assert s.seconds >= 0
    with pytest.raises(ValueError):
        s.values[0] = 1.0


def test_root_min_adjust():
    s = root_min_adjust(_scores(FORK, "degree"))
    assert s.root_adjusted
    assert s.values.tolist() == [0, 1, 0, 0]


def test_edge_importance_is_endpoint_mean():
    phi = np.array([1.0, 3.0, 5.0, 9.0])
    assert edge_importance(phi, FORK.edges()).tolist() == [2.0, 3.0, 6.0]


def _report(tree, kind, **kw):
    return check_principles(tree, root_min_adjust(_scores(tree, kind, **kw)))


def test_pagerank_principles_on_fork():
    rep = _report(FORK, "pagerank")
    assert rep.deep_nodes_preserved and rep.parents_over_children


def test_degree_ties_parent_and_child_on_chain():
    rep = _report(CHAIN4, "degree")
    assert rep.parents_over_children
    assert not rep.parents_over_children_strict


def test_closeness_ties_along_chain():
    rep = _report(CHAIN4, "closeness")
    assert rep.deep_nodes_preserved
    assert not rep.parents_over_children_strict


def test_betweenness_can_rank_child_above_parent():
    # level * descendants: a = 1*3, b = 2*2
    chain5 = tree_from_parents([-1, 0, 1, 2, 3])
    assert _scores(chain5, "betweenness").values.tolist() == [0, 3, 4, 3, 0]
    rep = _report(chain5, "betweenness")
    assert not rep.parents_over_children
    assert rep.deep_nodes_preserved


def test_pagerank_child_with_many_leaves_outranks_single_child_parent():
    # PR(p) - PR(c) has the sign of 1 - k(1-d) when c has k leaf children
    pr = _scores(HEAVY_CHILD, "pagerank").values
    assert pr[2] > pr[1]
    assert not _report(HEAVY_CHILD, "pagerank").parents_over_children
    six = tree_from_parents([-1, 0, 1] + [2] * 6)
    assert _report(six, "pagerank").strictly_decreasing


@pytest.mark.parametrize("kind, parents, verdict", [
    ("closeness", [-1, 0, 0, 0, 0, 0, 1, 6], "P2_nodes"),
    ("eigenvector", [-1, 0, 0, 0, 0, 1, 5], "P2_nodes"),
    ("katz", [-1, 0, 1, 2, 2], "P3_weak"),
    ("closeness", [-1, 0, 1, 2, 2], "P3_weak"),
])
def test_comparison_measures_break_principles(kind, parents, verdict):
    rep = _report(tree_from_parents(parents), kind)
    assert not rep.as_dict()[verdict]
    assert rep.violations


def test_pagerank_keeps_deep_nodes_on_reply_trees():
    for seed in range(100):
        t = tree_from_parents(rpt_parents(rng(seed)))
        assert _report(t, "pagerank").deep_nodes_preserved, seed


def test_principles_need_adjusted_scores():
    with pytest.raises(ValueError):
        check_principles(FORK, _scores(FORK, "pagerank"))
    with pytest.raises(ValueError):
        check_principles(tree_from_parents([-1]), root_min_adjust(_scores(FORK, "pagerank")))


def test_unordered_parent_arrays_give_same_report():
    # same shape as FORK, nodes listed in a different order
    shuffled = tree_from_parents([-1, 3, 0, 0])
    assert _report(shuffled, "degree").as_dict() == _report(FORK, "degree").as_dict()


def test_measure_accepts_strings():
    m = CentralityMeasure("PageRank")
    assert m.kind is Centrality.PAGERANK and m.direction.value == "bottom_up"
    assert CentralityMeasure("degree").direction.value == "top_down"
    assert m.iteration_cap == 200
