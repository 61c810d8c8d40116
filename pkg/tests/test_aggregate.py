import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgemdl.aggregate import aggregate, compute_iat
from edgemdl.discretize import choose_binning
from edgemdl.graph import parse_schema, read_graph
from edgemdl.pipeline import node_distributions

from conftest import TOY_SCHEMA

HEADER = "relation,source,target,stars,ts\n"


def _graph(rows, schema=None):
    schema = schema or parse_schema(json.dumps(TOY_SCHEMA))
    return read_graph(io.StringIO(HEADER + "".join(r + "\n" for r in rows)), schema)


def test_rating_vector_in_order():
    stars = [5, 5, 1, 2, 5, 3]
    g = _graph([f"rates,u,p{i},{s},{i * 10}" for i, s in enumerate(stars)])
    agg, _ = aggregate(g, "user", "rates")
    f = agg["u"]
    assert [int(x) for x in f.values["stars"]] == stars
    assert f.cardinality == 6
    assert f.count("ts") == 5


def test_untouched_node_absent():
    g = _graph(["rates,u1,p1,5,0"])
    agg, _ = aggregate(g, "user", "rates")
    assert "u2" not in agg and list(agg) == ["u1"]


def test_undirected_edge_seen_from_both_sides():
    g = _graph(["rates,u1,p1,4,0"])
    users, _ = aggregate(g, "user", "rates")
    products, _ = aggregate(g, "product", "rates")
    assert list(users["u1"].values["stars"]) == ["4"]
    assert list(products["p1"].values["stars"]) == ["4"]


def test_directed_roles():
    doc = {
        "object_types": ["user", "product"],
        "relations": [{"name": "buys", "source": "user", "target": "product", "directed": True,
                       "attributes": [{"name": "price", "kind": "numerical"}]}],
    }
    schema = parse_schema(json.dumps(doc))
    g = read_graph(io.StringIO("relation,source,target,price\nbuys,u1,p1,3\nbuys,u1,p2,4\nbuys,u2,p1,5\n"), schema)
    users, _ = aggregate(g, "user", "buys")
    products, _ = aggregate(g, "product", "buys")
    assert users["u1"].values["price"].tolist() == [3.0, 4.0]
    assert products["p1"].values["price"].tolist() == [3.0, 5.0]


@pytest.mark.parametrize(
    "ts, expected",
    [([100, 105, 205], [5, 100]), ([205, 100, 105], [5, 100]), ([42], []), ([], [])],
)
def test_compute_iat(ts, expected):
    assert compute_iat(ts).tolist() == expected


def test_temporal_stats_cover_iats():
    g = _graph(["rates,u1,p1,5,100", "rates,u1,p2,5,105", "rates,u1,p3,5,205"])
    _, stats = aggregate(g, "user", "rates")
    assert (stats["ts"].minimum, stats["ts"].maximum, stats["ts"].count) == (5.0, 100.0, 2)
    assert stats["stars"].count == 3


edge_rows = st.lists(
    st.tuples(st.integers(0, 6), st.integers(0, 6), st.integers(1, 5), st.integers(0, 10**6)),
    min_size=1,
    max_size=60,
)


@settings(max_examples=60, deadline=None)
@given(edge_rows)
def test_conservation_and_iat_sum(rows):
    g = _graph([f"rates,u{u},p{p},{s},{t}" for u, p, s, t in rows])
    for side, col in (("user", 0), ("product", 1)):
        agg, _ = aggregate(g, side, "rates")
        assert sum(v.cardinality for v in agg.values()) == len(rows)
        for node, vec in agg.items():
            own = [r[3] for r in rows if ("u" if col == 0 else "p") + str(r[col]) == node]
            iat = vec.values["ts"]
            assert len(iat) == len(own) - 1
            assert np.all(iat >= 0)
            assert iat.sum() == pytest.approx(max(own) - min(own), abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(edge_rows, st.randoms(use_true_random=False))
def test_distributions_permutation_invariant(rows, rnd):
    lines = [f"rates,u{u},p{p},{s},{t}" for u, p, s, t in rows]
    shuffled = lines[:]
    rnd.shuffle(shuffled)
    out = []
    for ls in (lines, shuffled):
        agg, stats = aggregate(_graph(ls), "user", "rates")
        per_node = {}
        for attr in ("stars", "ts"):
            if stats[attr].empty:
                continue
            spec = choose_binning(agg.kinds[attr], stats[attr], 20, agg.domains[attr])
            masses, n = node_distributions(agg, attr, spec)
            for i, node in enumerate(agg):
                per_node[(node, attr)] = (masses[i].tolist(), int(n[i]))
        out.append(per_node)
    assert out[0] == out[1]
