import io
import json

import numpy as np
import pytest

from edgemdl.cluster import XMeansConfig
from edgemdl.graph import parse_schema, read_graph
from edgemdl.model import ClusterModel, ModelFormatError
from edgemdl.pipeline import PipelineConfig, aggregate_all, run_pipeline
from edgemdl.score import score_unified
from edgemdl.synth import DEFAMER, HONEST_CRITICAL, HONEST_TYPICAL, RAPID_FIRE, generate

from conftest import TOY_EDGES


@pytest.fixture(scope="module")
def small():
    mix = [(HONEST_TYPICAL, 0.85), (HONEST_CRITICAL, 0.1), (RAPID_FIRE, 0.03), (DEFAMER, 0.02)]
    return generate(mix, n_users=600, n_products=60, seed=5).graph


def test_batch_scores_match_per_node(small):
    result = run_pipeline(small)
    aggregated = aggregate_all(small)
    for b, scores in result.scores.items():
        agg, _ = aggregated[(b, "rates")]
        for s in scores:
            one = score_unified([agg[s.node]], result.model)
            assert one.total == pytest.approx(s.total, rel=1e-9, abs=1e-9)
            for k, v in one.contributions.items():
                assert v == pytest.approx(s.contributions[k], rel=1e-9, abs=1e-9)


def test_breakdown_invariants(small):
    result = run_pipeline(small)
    for scores in result.scores.values():
        for s in scores:
            assert all(v >= 0 for v in s.contributions.values())
            assert abs(s.total - sum(s.contributions.values())) <= 1e-9


def test_model_json_round_trip_reproduces_scores(small):
    first = run_pipeline(small)
    model = ClusterModel.from_json(first.model.to_json())
    assert model.to_json() == first.model.to_json()
    second = run_pipeline(small, model=model)
    for b in first.rankings:
        assert [(e.node, e.score) for e in second.rankings[b].entries] == [
            (e.node, e.score) for e in first.rankings[b].entries
        ]


def test_bad_model_documents():
    with pytest.raises(ModelFormatError):
        ClusterModel.from_json("[]")
    with pytest.raises(ModelFormatError):
        ClusterModel.from_json('{"format": "edgemdl-cluster-model", "version": 99}')


def test_isolated_node_scores_zero_at_tail(toy_schema):
    g = read_graph(io.StringIO(TOY_EDGES), toy_schema, io.StringIO("node,type\nzz,user\n"))
    ranking = run_pipeline(g).rankings["user"]
    assert ranking.entries[-1].node == "zz" and ranking.entries[-1].score == 0.0


def test_same_type_relation():
    doc = {
        "object_types": ["account"],
        "relations": [{"name": "pays", "source": "account", "target": "account", "directed": True,
                       "attributes": [{"name": "amount", "kind": "numerical"}]}],
    }
    schema = parse_schema(json.dumps(doc))
    rng = np.random.default_rng(0)
    rows = [f"pays,a{rng.integers(20)},a{rng.integers(20)},{rng.lognormal(3, 1):.2f}" for _ in range(300)]
    rows += [f"pays,mule,a{i % 20},9999" for i in range(40)]
    g = read_graph(io.StringIO("relation,source,target,amount\n" + "\n".join(rows) + "\n"), schema)
    cfg = PipelineConfig(bins=10, xmeans=XMeansConfig(k_max=5))
    assert run_pipeline(g, cfg).rankings["account"].nodes[0] == "mule"
