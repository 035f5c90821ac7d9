"""End-to-end smoke of the python bindings against known values."""

import json
import math

import pytest

import pplbias


def jsonl(records):
    return "".join(json.dumps(r) + "\n" for r in records)


def twin_corpus(n=60):
    """Paired records with a planted perplexity effect of -0.5."""
    records = []
    for i in range(n):
        q = f"q{i:03d}"
        p_human = 4.0 + 0.3 * math.sin(i)
        p_gen = p_human - 1.0 + 0.05 * math.cos(i)
        quality = 0.5 + 0.1 * math.sin(3 * i)
        for suffix, source, ppl in (("human", 0, p_human), ("gen", 1, p_gen)):
            records.append({
                "query_id": q,
                "doc_id": f"{q}-d-{suffix}",
                "source": source,
                "score": quality - 0.5 * ppl,
                "perplexity": ppl,
            })
    return jsonl(records)


def test_ingest_and_diagnose_recovers_planted_effect():
    ds = pplbias.ingest_jsonl_text(twin_corpus())
    assert len(ds) == 120
    est_set = pplbias.build_estimation_set(ds, budget=128)
    assert est_set.skipped_queries == 0
    est = pplbias.diagnose(est_set.samples)
    assert est.n == 120
    assert est.beta2 == pytest.approx(-0.5, abs=3 * est.se2)
    assert est.p2 < 0.05
    assert not est.weak_instrument


def test_diagnose_without_data_raises_coded_error():
    with pytest.raises(pplbias.Error, match="insufficient_data"):
        pplbias.diagnose([])


def test_cdc_with_zero_override_keeps_rankings():
    ds = pplbias.ingest_jsonl_text(twin_corpus())
    run = pplbias.RankedRun.from_scores("q1", [("a", 0.3), ("b", 0.2), ("c", 0.1)])
    cfg = pplbias.CdcConfig()
    cfg.beta2_override = 0.0
    result = pplbias.run_cdc(ds, [run], {"a": 2.0, "b": 3.0, "c": 4.0}, cfg)
    assert result.estimate is None
    assert result.beta2_used == 0.0
    assert [e.doc_id for e in result.runs[0].entries] == ["a", "b", "c"]
    assert [e.calibrated_score for e in result.runs[0].entries] == [0.3, 0.2, 0.1]


def test_cdc_estimates_and_moves_penalized_doc():
    ds = pplbias.ingest_jsonl_text(twin_corpus())
    # the high-perplexity document trails by less than the penalty it carries
    run = pplbias.RankedRun.from_scores("q1", [("d-gen", 0.9), ("d-human", 0.5)])
    result = pplbias.run_cdc(ds, [run], {"d-gen": 3.0, "d-human": 4.0}, pplbias.CdcConfig())
    assert result.estimate is not None
    assert result.beta2_used == pytest.approx(-0.5, abs=0.05)
    assert [e.doc_id for e in result.runs[0].entries] == ["d-human", "d-gen"]


def test_metric_oracles():
    run = pplbias.RankedRun.from_scores("q1", [("a", 0.9), ("b", 0.8), ("c", 0.7)])
    qrels = {("q1", "a"): 1, ("q1", "b"): 0, ("q1", "c"): 1}
    assert pplbias.ndcg_at_k(run, qrels, 3) == pytest.approx(0.9197207891481876, abs=1e-12)
    assert pplbias.relative_delta(60.0, 40.0) == 40.0
    assert pplbias.pearson([1.0, 2.0, 3.0, 4.0], [8.0, 6.0, 4.0, 2.0]) == -1.0


def test_trec_text_round_trip_is_bitwise():
    run = pplbias.RankedRun.from_scores("q1", [("a", 0.1 + 0.2), ("b", 1.0 / 3.0)])
    text = pplbias.to_trec_text([run], "tag")
    back = pplbias.from_trec_text(text)
    assert back[0].ranking == run.ranking


def test_overlap_identity_sweep_passes():
    report = pplbias.verify_overlap_identity(10, pplbias.LabRanges(), seed=7)
    assert report.trials == 10
    assert report.pass_rate == 1.0
    assert report.max_identity_err < 1e-8
    assert report.max_fd_err < 1e-5
    assert report.k_bound_ok
    assert all(row.k_max <= row.k_bound for row in report.rows)


def test_broken_instances_violate_identity():
    report = pplbias.verify_overlap_identity(
        20, pplbias.LabRanges(), seed=7, broken=pplbias.BreakCondition.cooperation)
    assert report.max_identity_err > 1e-3
