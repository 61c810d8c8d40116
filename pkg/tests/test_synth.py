import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgemdl.graph import dump_edges
from edgemdl.synth import (
    DEFAMER,
    HONEST_TYPICAL,
    RAPID_FIRE,
    ActivityLaw,
    BehaviorArchetype,
    IATLaw,
    SynthConfig,
    SynthConfigError,
    default_config,
    dump_labels,
    generate,
    loglog_slope,
    parse_labels,
    precision_at_k,
    scaling_benchmark,
    subsample_edges,
)

ENTHUSIAST = BehaviorArchetype(
    "enthusiastic", (0, 0, 0, 0, 1), IATLaw("lognormal", mu=8.0, sigma=1.0), ActivityLaw("geometric", p=0.2)
)


def test_point_mass_archetype():
    lg = generate([(ENTHUSIAST, 1.0)], n_users=50, n_products=20, seed=3)
    assert {e[4]["stars"] for e in lg.graph.iter_edges()} == {"5"}


def test_same_seed_same_bytes():
    a = generate([(HONEST_TYPICAL, 0.95), (DEFAMER, 0.05)], n_users=300, n_products=40, seed=9)
    b = generate([(HONEST_TYPICAL, 0.95), (DEFAMER, 0.05)], n_users=300, n_products=40, seed=9)
    assert dump_edges(a.graph) == dump_edges(b.graph)
    assert dump_labels(a.labels) == dump_labels(b.labels)


def test_label_counts_golden():
    lg = generate([(HONEST_TYPICAL, 0.9), (RAPID_FIRE, 0.1)], n_users=1000, n_products=100, seed=0)
    counts = Counter(lg.labels.values())
    assert counts == {"honest": 908, "fraud:rapid-fire-5star": 92}
    sigma = math.sqrt(1000 * 0.9 * 0.1)
    assert abs(counts["honest"] - 900) <= 3 * sigma


def test_default_scenario_is_exact():
    lg = generate(default_config(n_honest=1000, n_fraud=10, n_products=100))
    assert Counter(lg.labels.values()) == {"honest": 1000, "fraud:rapid-fire-5star": 10}


def test_every_user_edge_endpoint_labeled():
    lg = generate([(HONEST_TYPICAL, 0.9), (RAPID_FIRE, 0.1)], n_users=200, n_products=30, seed=1)
    assert {e[2] for e in lg.graph.iter_edges()} <= set(lg.labels)


@pytest.mark.parametrize(
    "mix, n_users, fragment",
    [
        ([], 10, "empty"),
        ([(HONEST_TYPICAL, 0.5), (RAPID_FIRE, 0.2)], 10, "sum to 1"),
        ([(HONEST_TYPICAL, 1.0)], 0, "empty population"),
    ],
)
def test_invalid_configs(mix, n_users, fragment):
    with pytest.raises(SynthConfigError, match=fragment):
        generate(mix, n_users=n_users, n_products=5)


def test_config_json_round_trip():
    cfg = default_config(50, 5, 10, seed=4)
    again = SynthConfig.from_json(cfg.to_json())
    assert again.to_json() == cfg.to_json()
    assert dump_edges(generate(again).graph) == dump_edges(generate(cfg).graph)


def test_labels_csv_round_trip():
    labels = {"u1": "honest", "u2": "fraud:defamer"}
    assert parse_labels(dump_labels(labels)) == labels


LABELS = {f"n{i}": ("fraud:x" if i < 100 else "honest") for i in range(1000)}


def test_precision_at_k():
    assert precision_at_k([f"n{i}" for i in range(10)], LABELS, 10) == 1.0
    seven = [f"n{i}" for i in range(7)] + ["n500", "n501", "n502"]
    assert precision_at_k(seven, LABELS, 10) == pytest.approx(0.7)
    assert precision_at_k(list(LABELS), LABELS, 1000) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        precision_at_k(list(LABELS), LABELS, 0)
    with pytest.raises(ValueError):
        precision_at_k(["n1"], LABELS, 2)


def test_precision_monotone_when_fraud_first():
    ranking = list(LABELS)
    values = [precision_at_k(ranking, LABELS, k) for k in range(1, 1001)]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_benchmark_rows_and_nested_samples():
    g = generate(default_config(300, 3, 30)).graph
    rows = scaling_benchmark(g, [0.1, 1.0], seed=2)
    assert len(rows) == 2
    assert rows[1][0] / rows[0][0] == pytest.approx(10, rel=0.01)
    assert [r[0] for r in scaling_benchmark(g, [0.1, 1.0], seed=2)] == [r[0] for r in rows]
    small = {e[1:4] + (tuple(e[4].items()),) for e in subsample_edges(g, 0.2, 5).iter_edges()}
    large = {e[1:4] + (tuple(e[4].items()),) for e in subsample_edges(g, 0.5, 5).iter_edges()}
    assert small <= large


def test_loglog_slope_of_linear_times():
    assert loglog_slope([(10, 1.0), (100, 10.0), (1000, 100.0)]) == pytest.approx(1.0)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.floats(0.05, 1), min_size=5, max_size=5))
def test_heavy_users_match_their_mass(seed, raw):
    # sampling noise alone gives L1 ~ 0.16 at 100 edges on a flat mass, so use thousands
    mass = tuple(np.array(raw) / sum(raw))
    heavy = BehaviorArchetype("heavy", mass, IATLaw("fixed", value=60.0), ActivityLaw("uniform", low=2000, high=3000))
    lg = generate([(heavy, 1.0)], n_users=5, n_products=50, seed=seed)
    per_user = {}
    for _, _, u, _, vals in lg.graph.iter_edges():
        per_user.setdefault(u, []).append(int(vals["stars"]))
    for stars in per_user.values():
        assert len(stars) >= 100
        emp = np.bincount(np.array(stars) - 1, minlength=5) / len(stars)
        assert np.abs(emp - mass).sum() < 0.1
