import pytest

from dirichlet_graph.graph import VertexFunction, WeightedGraph, ball, generate, oracle_from_graph
from dirichlet_graph.io import (
    GraphFormatError,
    GraphSemanticError,
    dumps_function,
    dumps_graph,
    load_graph,
    parse_function,
    parse_graph,
    read_graph,
    write_graph,
)


def test_parse_graph_defaults_and_comments():
    g, problems = parse_graph(
        """
        # a path
        v a 2 0.5
        e a b 1.5   # trailing comment
        e b c 1
        """
    )
    assert problems == []
    assert g.vertices == ("a", "b", "c")
    assert g.m == {"a": 2.0, "b": 1.0, "c": 1.0}
    assert g.c == {"a": 0.5, "b": 0.0, "c": 0.0}
    assert g.deg["b"] == 2.5


def test_duplicate_edge_with_other_weight_is_asymmetry():
    g, problems = parse_graph("e a b 1\ne b a 2\n")
    from dirichlet_graph.graph import validate

    rules = [p.rule for p in problems + validate(g)]
    assert rules == ["duplicate edge", "symmetry"]


def test_self_loop_is_reported():
    _, problems = parse_graph("e a a 1\n")
    assert problems[0].rule == "self-loop"


@pytest.mark.parametrize("text", ["e a b\n", "v a 1\n", "q a b 1\n", "e a b heavy\n", "x a\n"])
def test_syntax_errors(text):
    with pytest.raises(GraphFormatError):
        parse_graph(text)


def test_read_graph_rejects_semantic_problems(tmp_path):
    p = tmp_path / "bad.g"
    p.write_text("e a b -1\n")
    with pytest.raises(GraphSemanticError) as info:
        read_graph(p)
    assert info.value.violations[0].rule == "weight positivity"


def test_graph_round_trip_with_external(tmp_path):
    g = ball(generate("lattice", d=2), (0, 0), 2).realization
    p = tmp_path / "z2.g"
    write_graph(g, p)
    h = read_graph(p)
    assert h.vertices == g.vertices
    assert h.deg == g.deg
    assert h.external == g.external
    assert h.interior == g.interior
    assert dumps_graph(h) == dumps_graph(g)


def test_file_oracle_reproduces_generator_ball(tmp_path):
    o = generate("path_chain", beta=2, mu=1)
    g = ball(o, 0, 6).realization
    p = tmp_path / "chain.g"
    write_graph(g, p)
    fo = oracle_from_graph(read_graph(p))
    for r in range(0, 7):
        a, b = ball(o, 0, r).realization, ball(fo, 0, r).realization
        assert a.vertices == b.vertices and a.deg == b.deg and a.interior == b.interior


def test_function_files():
    u = parse_function("a 1.5\n# c\nb -2\n")
    assert u("a") == 1.5 and u("b") == -2.0 and u("zz") == 0.0
    assert parse_function(dumps_function(u)).values == u.values
    with pytest.raises(GraphFormatError):
        parse_function("a 1\na 2\n")
    with pytest.raises(GraphFormatError):
        parse_function("a\n")


def test_load_graph_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_graph(tmp_path / "nope.g")
