import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import line, vnr
from vnembed.config import RaterConfig
from vnembed.errors import GenerationError
from vnembed.fitness.features import (PlanEvaluator, cpu_candidates, extract_features,
                                      normalize_features, quantile_ratings,
                                      random_assignment, read_dataset_csv, synth_ratings,
                                      write_dataset_csv)
from vnembed.fitness.net import accuracy
from vnembed.linkmap import RouteCache, map_links
from vnembed.netmodel import EmbeddingPlan, allocate, qos_totals, quotation, revenue_and_cost
from vnembed.sim import train_rater
from vnembed.topogen import ScenarioConfig, gen_substrate, gen_vnr

DESK = ScenarioConfig.desk(rng_seed=5)


def test_normalize_extremes():
    raw = np.array([[1.0, 2.0, 3.0], [5.0, 6.0, 7.0], [3.0, 4.0, 5.0]])
    out = normalize_features(raw)
    assert out[0].tolist() == [0, 0, 0] and out[1].tolist() == [1, 1, 1]
    assert normalize_features(raw[:1]).tolist() == [[0.5, 0.5, 0.5]]
    twins = normalize_features(np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 9.0]]))
    assert twins[0].tolist() == twins[1].tolist()


def test_quantile_ratings_split_evenly():
    scores = np.random.default_rng(0).permutation(300) / 300
    r = quantile_ratings(scores, 3)
    assert np.bincount(r)[1:].tolist() == [100, 100, 100]
    assert r[np.argmin(scores)] == 1 and r[np.argmax(scores)] == 3
    assert quantile_ratings(np.ones(9), 3).tolist() == [1] * 9


def oracle_metrics(s, v, genes, routes):
    """Recompute a raw metric row from netmodel primitives."""
    paths = {i: routes.route(genes[vl.endpoints[0]], genes[vl.endpoints[1]], vl.bw_demand).links
             for i, vl in enumerate(v.links)}
    plan = EmbeddingPlan(genes, paths)
    q = quotation(s, v, plan)
    delay, plr = qos_totals(s, plan)
    rev, cost = revenue_and_cost(v, plan)
    load = {}
    for i, vl in enumerate(v.links):
        for li in paths[i]:
            load[li] = load.get(li, 0) + vl.bw_demand
    used = np.array([routes.used[li] + b for li, b in load.items()], dtype=float)
    return [q, delay, plr, float(used.var()) if used.size else 0.0, cost / rev]


def test_evaluator_rows_match_netmodel_oracle():
    s = gen_substrate(DESK)
    # load the substrate a little so the surcharge and used-bandwidth terms matter
    warm = gen_vnr(DESK, 99)
    genes = random_assignment(cpu_candidates(s, warm), np.random.default_rng(0))
    allocate(s, warm, EmbeddingPlan(genes, map_links(s, warm, genes)))
    rng = np.random.default_rng(1)
    for seed in range(5):
        v = gen_vnr(DESK, seed)
        routes = RouteCache(s, 2.0)
        ev = PlanEvaluator(s, v, routes)
        pop = [random_assignment(cpu_candidates(s, v), rng) for _ in range(12)]
        rows = ev.raw_metrics_many(pop)
        for genes, row in zip(pop, rows):
            assert np.allclose(row, oracle_metrics(s, v, genes, routes), rtol=1e-12, atol=1e-9)
            assert ev.fitness(genes) == pytest.approx(row[0])


def test_unroutable_pair_gets_penalty_above_any_route():
    # two islands joined by a thin link the request cannot use
    s = line(4, bw=100)
    s.links[1].bw_free = 1
    v = vnr([1, 1], [(0, 1, 5)])
    ev = PlanEvaluator(s, v)
    assert not ev.routable((0, 3))
    assert ev.routable((0, 1))
    assert ev.quotation((0, 3)) > ev.quotation((0, 1))


def test_extract_features_is_normalised():
    s = gen_substrate(DESK)
    v = gen_vnr(DESK, 3)
    pop = [random_assignment(cpu_candidates(s, v), np.random.default_rng(i)) for i in range(10)]
    f = extract_features(PlanEvaluator(s, v), pop)
    assert f.shape == (10, 5)
    assert f.min() >= 0 and f.max() <= 1


def test_synth_ratings_deterministic_and_balanced():
    s = gen_substrate(DESK)
    v = gen_vnr(DESK, 2)
    a = synth_ratings(s, v, 60, seed=4)
    b = synth_ratings(s, v, 60, seed=4)
    assert [x.rating for x in a] == [x.rating for x in b]
    assert all(np.array_equal(x.features, y.features) for x, y in zip(a, b))
    counts = np.bincount([x.rating for x in a])[1:]
    assert counts.sum() == 60 and counts.min() >= 15


def test_synth_ratings_dominance_is_monotone():
    s = gen_substrate(DESK)
    data = synth_ratings(s, gen_vnr(DESK, 7), 90, seed=1)
    for p in data:
        for q in data:
            if (p.features <= q.features).all():
                assert p.rating <= q.rating


def test_synth_ratings_errors():
    s = gen_substrate(DESK)
    v = gen_vnr(DESK, 2)
    with pytest.raises(ValueError):
        synth_ratings(s, v, 2, seed=0, n=3)
    tiny = line(3)
    with pytest.raises(GenerationError):
        synth_ratings(tiny, vnr([1, 1], [(0, 1, 1)]), 30, seed=0)


def test_dataset_csv_roundtrip(tmp_path):
    s = gen_substrate(DESK)
    data = synth_ratings(s, gen_vnr(DESK, 2), 12, seed=0)
    write_dataset_csv(tmp_path / "d.csv", data)
    back = read_dataset_csv(tmp_path / "d.csv")
    assert [x.rating for x in back] == [x.rating for x in data]
    assert all(np.array_equal(x.features, y.features) for x, y in zip(back, data))


def test_trained_rater_agrees_with_oracle_on_held_out_plans():
    s = gen_substrate(DESK)
    net = train_rater(s, DESK, RaterConfig(), seed=11)
    held = []
    for i in range(4):
        held += synth_ratings(s, gen_vnr(DESK, 1000 + i), 60, seed=500 + i)
    assert accuracy(net, held) >= 0.7


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=30), st.integers(2, 5))
def test_quantile_ratings_monotone(scores, n):
    scores = np.array(scores)
    r = quantile_ratings(scores, n)
    assert r.min() >= 1 and r.max() <= n
    order = np.argsort(scores, kind="stable")
    assert (np.diff(r[order]) >= 0).all()
