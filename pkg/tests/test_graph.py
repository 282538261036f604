import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taim.graph import (
    EdgeListParseError,
    Graph,
    GraphError,
    ProbModel,
    ProbModelError,
    generate_line_graph,
    generate_power_law,
    load_edge_list,
)

from conftest import make_graph


def write(tmp_path, text, name="g.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_weighted_cascade_probabilities(tmp_path):
    g = load_edge_list(write(tmp_path, "0 1\n2 1\n0 2\n"), "wc")
    assert g.n == 3 and g.m == 3
    assert g.prob[g.edge_id(g.node_id("0"), g.node_id("1"))] == 0.5
    assert g.prob[g.edge_id(g.node_id("2"), g.node_id("1"))] == 0.5
    assert g.prob[g.edge_id(g.node_id("0"), g.node_id("2"))] == 1.0


def test_uniform_model(tmp_path):
    g = load_edge_list(write(tmp_path, "0 1\n1 2\n2 0\n0 2\n"), "uniform:0.01")
    assert np.all(g.prob == 0.01)


def test_duplicates_merged_and_self_loops_dropped(tmp_path):
    g = load_edge_list(write(tmp_path, "0 1\n0 1\n1 1\n"), ProbModel.parse("uniform:0.3"))
    assert g.m == 1
    assert g.prob[0] == pytest.approx(0.3)


def test_explicit_weights_scaled_to_max_one(tmp_path):
    g = load_edge_list(write(tmp_path, "a b 2\nb c 4\na b 2\n"), "explicit")
    # the duplicate a->b sums to 4, the maximum
    assert g.prob[g.edge_id(g.node_id("a"), g.node_id("b"))] == 1.0
    assert g.prob[g.edge_id(g.node_id("b"), g.node_id("c"))] == 1.0
    assert "normalizer" in str(g.meta) or g.meta.get("prob_model") == "explicit"


def test_comments_and_labels(tmp_path):
    g = load_edge_list(write(tmp_path, "# header\nalice bob\n\nbob carol  # trailing\n"), "wc")
    assert g.n == 3
    assert [g.label(i) for i in range(3)] == ["alice", "bob", "carol"]


@pytest.mark.parametrize("text,lineno", [("0 1\n0\n", 2), ("0 1\n1 2 x\n", 2), ("0 1 -1\n", 1)])
def test_parse_errors_report_line(tmp_path, text, lineno):
    with pytest.raises(EdgeListParseError) as exc:
        load_edge_list(write(tmp_path, text), "wc")
    assert exc.value.lineno == lineno


@pytest.mark.parametrize("text", ["uniform:0", "uniform:1.5", "uniform", "bogus"])
def test_bad_prob_model(text):
    with pytest.raises(ProbModelError):
        ProbModel.parse(text)


def test_adjacency_consistent():
    g = make_graph(4, [(0, 1, 0.5), (0, 2, 0.5), (2, 1, 0.3), (3, 0, 1.0)])
    fwd = {(int(g.src[e]), int(g.dst[e])) for e in range(g.m)}
    rev = set()
    for v in range(g.n):
        for j in range(g.in_ptr[v], g.in_ptr[v + 1]):
            e = g.in_eid[j]
            assert g.in_src[j] == g.src[e] and g.dst[e] == v
            rev.add((int(g.in_src[j]), v))
    assert fwd == rev
    assert g.out_degree().tolist() == [2, 0, 1, 1]
    assert g.in_degree().tolist() == [1, 2, 1, 0]


@pytest.mark.parametrize("prob", [0.0, -0.1, 1.5])
def test_rejects_bad_probability(prob):
    with pytest.raises(GraphError):
        make_graph(2, [(0, 1, prob)])


def test_rejects_self_loop_and_duplicates():
    with pytest.raises(GraphError):
        make_graph(2, [(0, 0)])
    with pytest.raises(GraphError):
        make_graph(2, [(0, 1), (0, 1)])


def test_graph_arrays_read_only():
    g = make_graph(2, [(0, 1, 0.5)])
    with pytest.raises(ValueError):
        g.prob[0] = 0.9


@pytest.mark.parametrize("N,p", [(2, 0.5), (10, 0.9)])
def test_line_graph(N, p):
    g = generate_line_graph(N)
    assert g.n == 2 * N + 1 and g.m == 2 * N
    assert np.allclose(g.prob, p)
    assert g.src.tolist() == list(range(2 * N)) and g.dst.tolist() == list(range(1, 2 * N + 1))


def test_line_graph_rejects_small_N():
    with pytest.raises(GraphError):
        generate_line_graph(1)


def test_power_law_deterministic_and_degree():
    a = generate_power_law(2000, 2.5, 10, seed=3)
    b = generate_power_law(2000, 2.5, 10, seed=3)
    c = generate_power_law(2000, 2.5, 10, seed=4)
    assert np.array_equal(a.src, b.src) and np.array_equal(a.dst, b.dst) and np.array_equal(a.prob, b.prob)
    assert not np.array_equal(a.dst, c.dst)
    assert abs(a.m / a.n - 10) < 1.0
    # weighted cascade: incoming probabilities sum to one at every reached node
    sums = np.bincount(a.dst, weights=a.prob, minlength=a.n)
    assert np.allclose(sums[a.in_degree() > 0], 1.0)


def test_power_law_heavy_tail():
    g = generate_power_law(3000, 2.2, 8, seed=1)
    deg = g.out_degree()
    assert deg.max() > 10 * np.median(deg)


@pytest.mark.parametrize("args", [(1, 2.5, 3), (100, 1.0, 3), (100, 2.5, 0.5), (10, 2.5, 50)])
def test_power_law_errors(args):
    with pytest.raises(GraphError):
        generate_power_law(*args, seed=0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6)), min_size=1, max_size=25))
def test_loader_roundtrip_property(tmp_path_factory, pairs):
    text = "\n".join(f"n{u} n{v}" for u, v in pairs) + "\n"
    path = tmp_path_factory.mktemp("h") / "e.txt"
    path.write_text(text)
    distinct = {(u, v) for u, v in pairs if u != v}
    g = load_edge_list(path, "wc")
    assert g.n == len({x for pair in pairs for x in pair})
    got = {(int(g.label(int(s))[1:]), int(g.label(int(d))[1:])) for s, d in zip(g.src, g.dst)}
    assert got == distinct
    assert np.all((g.prob > 0) & (g.prob <= 1))
