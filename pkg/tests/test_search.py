import math

import numpy as np
import pytest

from conftest import random_contraction
from traceineq.ensembles import SamplerConfig
from traceineq.errors import InvalidInputError, UnknownInequalityError
from traceineq.inequalities import evaluate, lemma2_margin
from traceineq.report import format_record
from traceineq.search import (
    HISTOGRAM_LABELS,
    CampaignConfig,
    deserialize_inputs,
    draw_inputs,
    draw_lemma2_triple,
    partition,
    perturb_inputs,
    project_inputs,
    refine,
    run_campaign,
    serialize_inputs,
)


def summary_bytes(result):
    return format_record(result.summary()) + format_record(
        result.argmin_witness.to_dict() if result.argmin_witness else {}
    )


def test_zero_samples():
    res = run_campaign(CampaignConfig("thm1", dim=3, samples=0, seed=1))
    assert res.evaluated == 0
    assert res.min_margin == math.inf
    assert res.argmin_witness is None
    assert sum(res.histogram) == 0


def test_determinism():
    cfg = CampaignConfig("eq3", dim=3, samples=20, seed=9, s_values=(0.2, 0.8), refine_steps=3)
    assert summary_bytes(run_campaign(cfg)) == summary_bytes(run_campaign(cfg))


@pytest.mark.parametrize("tag, dim", [("thm1", 3), ("lemma2", 3), ("remark2", 2), ("lemma1-jensen", 2)])
def test_workers_agree(tag, dim):
    cfg = CampaignConfig(tag, dim=dim, samples=24, seed=4, refine_steps=2)
    one = run_campaign(cfg, workers=1, keep_records=True)
    four = run_campaign(cfg, workers=4, keep_records=True)
    assert summary_bytes(one) == summary_bytes(four)
    assert [format_record(r) for r in one.records] == [format_record(r) for r in four.records]


@pytest.mark.parametrize("samples, workers", [(0, 4), (3, 8), (10, 4), (1000, 7)])
def test_partition_covers_range(samples, workers):
    chunks = partition(samples, workers)
    assert chunks[0][0] == 0 and chunks[-1][1] == samples
    assert all(a[1] == b[0] for a, b in zip(chunks, chunks[1:]))


def test_commuting_sampler_thm1_never_violates():
    sampler = SamplerConfig(seed=13, dim=4, kind="commuting_pair")
    res = run_campaign(CampaignConfig("thm1", dim=4, samples=300, seed=13, sampler=sampler))
    assert res.violations == 0 and res.min_margin >= 0


def test_counts_and_histogram():
    cfg = CampaignConfig("eq3", dim=2, samples=30, seed=2, s_values=(0.0, 0.5, 1.0))
    res = run_campaign(cfg, keep_records=True)
    assert res.evaluated == 90 == sum(res.histogram) == len(res.records)
    assert len(res.histogram) == len(HISTOGRAM_LABELS)
    assert res.min_margin == min(r["margin"] for r in res.records)
    assert res.asserted_violations == 0


def test_witness_reevaluates():
    cfg = CampaignConfig("thm2-trace", dim=3, samples=15, seed=21)
    w = run_campaign(cfg).argmin_witness
    inputs = deserialize_inputs(serialize_inputs(w.inputs))
    assert abs(evaluate("thm2-trace", inputs, w.s).margin - w.margin) <= 1e-12


def test_refined_witness_reevaluates():
    cfg = CampaignConfig("q1", dim=3, samples=10, seed=8, refine_steps=15)
    res = run_campaign(cfg)
    w = res.argmin_witness
    assert res.refined == 10
    inputs = deserialize_inputs(w.to_dict()["inputs"])
    assert abs(evaluate("q1", inputs).margin - w.margin) <= 1e-12


def test_lemma2_negatives_are_not_asserted():
    res = run_campaign(CampaignConfig("lemma2", dim=3, samples=400, seed=0))
    assert res.asserted_violations == 0


def test_lemma2_triples_satisfy_conditions():
    for i in range(200):
        tri = draw_lemma2_triple(3, i, 3)
        _, ci, cii = lemma2_margin(tri["t"], tri["a"], tri["b"], 0.5)
        assert min(ci, cii) >= -1e-12 and abs(min(ci, cii)) <= 1e-12


def test_jensen_draws_are_valid():
    cfg = CampaignConfig("lemma1-jensen", dim=3, samples=5, seed=3)
    for i in range(50):
        inp = draw_inputs(cfg, i)
        total = sum(c.conj().T @ c for c in inp["C"])
        assert np.linalg.eigvalsh(total).max() <= 1 + 1e-12
        assert min(np.linalg.eigvalsh(k).min() for k in inp["K"]) >= 0


@pytest.mark.parametrize("tag, dim", [("thm1", 3), ("remark4", 3), ("remark2", 2), ("lemma2", 3), ("lemma1-jensen", 2)])
def test_projection_is_idempotent(tag, dim):
    cfg = CampaignConfig(tag, dim=dim, samples=1, seed=6)
    kind = cfg.input_type
    rng = np.random.default_rng(0)
    for i in range(20):
        base = draw_inputs(cfg, i)
        once = project_inputs(kind, perturb_inputs(kind, base, rng, 0.1))
        twice = project_inputs(kind, once)
        a, b = serialize_inputs(once), serialize_inputs(twice)
        flat_a = np.concatenate([np.ravel(x) for x in _leaves(a)])
        flat_b = np.concatenate([np.ravel(x) for x in _leaves(b)])
        assert np.max(np.abs(flat_a - flat_b)) <= 1e-12
        evaluate(tag, twice, cfg.s_values[0])


def _leaves(obj):
    if isinstance(obj, dict):
        for v in obj.values():
            yield from _leaves(v)
    elif isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
        for v in obj:
            yield from _leaves(v)
    else:
        yield np.asarray(obj, dtype=float)


def test_refine_zero_steps(rng):
    A, B = random_contraction(3, rng), random_contraction(3, rng)
    ser = serialize_inputs({"A": A, "B": B})
    out = refine("thm1", ser, None, 0, 0.1, seed=1)
    assert out.inputs == ser
    assert out.margin == evaluate("thm1", {"A": A, "B": B}).margin
    assert out.history == [out.margin]


@pytest.mark.parametrize("tag, s", [("thm1", None), ("eq3", 0.5), ("q2", None)])
def test_refine_history_nonincreasing(rng, tag, s):
    ser = serialize_inputs({"A": random_contraction(3, rng), "B": random_contraction(3, rng)})
    out = refine(tag, ser, s, 40, 0.1, seed=5)
    assert len(out.history) == 41
    assert all(b <= a for a, b in zip(out.history, out.history[1:]))
    assert out.margin == out.history[-1]
    assert abs(evaluate(tag, deserialize_inputs(out.inputs), s).margin - out.margin) <= 1e-12


def test_refine_thm1_stays_nonnegative(rng):
    for seed in range(5):
        ser = serialize_inputs({"A": random_contraction(2, rng), "B": random_contraction(2, rng)})
        assert refine("thm1", ser, None, 100, 0.2, seed=seed).margin >= -1e-9


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(samples=-1),
        dict(dim=0),
        dict(refine_steps=-1),
        dict(refine_step_size=0.0),
        dict(inequality_id="eq3", s_values=(1.5,)),
        dict(sampler=SamplerConfig(seed=1, dim=2, kind="ginibre_density")),
        dict(sampler=SamplerConfig(seed=2, dim=2, kind="spectral_contraction")),
    ],
)
def test_config_validation(kwargs):
    base = dict(inequality_id="thm1", dim=2, samples=1, seed=1)
    base.update(kwargs)
    with pytest.raises(InvalidInputError):
        CampaignConfig(**base)


def test_config_unknown_tag_and_defaults():
    with pytest.raises(UnknownInequalityError):
        CampaignConfig("nosuch", dim=2, samples=1, seed=1)
    assert CampaignConfig("thm1", 2, 1, 1).s_values == (1.0,)
    assert CampaignConfig("q1", 2, 1, 1).s_values == (None,)
    assert len(CampaignConfig("eq3", 2, 1, 1).s_values) == 11


def test_malformed_bundle():
    with pytest.raises(InvalidInputError):
        deserialize_inputs({"A": {"dim": 1, "re": [[1.0]]}})
