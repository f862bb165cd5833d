"""Accuracy, cosine, similarity analysis, sweeps, and sample worth."""

from __future__ import annotations

import math
import random
import statistics

import pytest

from sgicl import (
    DemonstrationCache,
    Example,
    InputError,
    MethodReport,
    Prediction,
    RunConfig,
    SamplingConfig,
    StubBackend,
    StubScript,
    UndefinedSimilarityError,
    accuracy,
    assign_classes,
    build_report,
    cosine,
    generation_seed,
    render_generation_prompt,
    run_method,
    sample_worth,
    shot_sweep,
    similarity_analysis,
)


def _pred(i: int, n: int = 3) -> Prediction:
    return Prediction.from_scores([0.0 if j == i else -1.0 for j in range(n)])


# ---------------------------------------------------------------------------
# accuracy
# ---------------------------------------------------------------------------


def test_accuracy_trivial_cases():
    assert accuracy([_pred(0), _pred(1)], [0, 1]) == 1.0
    assert accuracy([_pred(0), _pred(1), _pred(0)], [0, 0, 0]) == pytest.approx(2 / 3)


def test_accuracy_rejects_empty_and_mismatched():
    with pytest.raises(InputError):
        accuracy([], [])
    with pytest.raises(InputError):
        accuracy([_pred(0)], [0, 1])


def test_accuracy_is_permutation_invariant():
    rng = random.Random(3)
    preds = [_pred(rng.randrange(3)) for _ in range(30)]
    golds = [rng.randrange(3) for _ in range(30)]
    baseline = accuracy(preds, golds)
    order = list(range(30))
    rng.shuffle(order)
    assert accuracy([preds[i] for i in order], [golds[i] for i in order]) == baseline


# ---------------------------------------------------------------------------
# MethodReport
# ---------------------------------------------------------------------------


def test_report_mean_and_std_recomputable():
    per_seed = (0.6, 0.64, 0.58, 0.62, 0.66)
    report = MethodReport.from_per_seed(
        task="sst2", method="sg-icl", k=8, variant="manual",
        seeds=(0, 1, 2, 3, 4), per_seed_accuracy=per_seed,
    )
    assert report.mean == pytest.approx(statistics.fmean(per_seed), abs=1e-12)
    assert report.std == pytest.approx(statistics.stdev(per_seed), abs=1e-12)
    assert report.min_accuracy == 0.58
    assert report.max_accuracy == 0.66


def test_report_single_seed_has_zero_std():
    report = MethodReport.from_per_seed(
        task="sst2", method="zero-shot", k=0, variant="manual",
        seeds=(0,), per_seed_accuracy=(0.5,),
    )
    assert report.std == 0.0


def test_report_requires_one_accuracy_per_seed():
    with pytest.raises(InputError):
        MethodReport.from_per_seed(
            task="sst2", method="sg-icl", k=8, variant="manual",
            seeds=(0, 1), per_seed_accuracy=(0.5,),
        )


def test_build_report_groups_by_seed(sst2, stub_backend):
    dataset = [
        Example(id=f"{i + 2:06d}", text1=f"text {i} .", gold=i % 2) for i in range(4)
    ]
    config = RunConfig(method="zero-shot", k=0, seeds=(0, 1, 2))
    results = run_method(sst2, dataset, config, stub_backend)
    report = build_report(sst2, config, results, {ex.id: ex.gold for ex in dataset})
    assert report.seeds == (0, 1, 2)
    assert len(report.per_seed_accuracy) == 3
    assert report.n_examples == 4
    # zero-shot: every seed sees the same predictions
    assert len(set(report.per_seed_accuracy)) == 1


# ---------------------------------------------------------------------------
# cosine
# ---------------------------------------------------------------------------


def test_cosine_identity_is_exactly_one():
    assert cosine((3.0, 4.0), (3.0, 4.0)) == 1.0


def test_cosine_orthogonal_is_zero():
    assert cosine((1.0, 0.0), (0.0, 1.0)) == 0.0


def test_cosine_matches_brute_force_oracle():
    rng = random.Random(17)
    for _ in range(200):
        dim = 16
        u = [rng.uniform(-2, 2) for _ in range(dim)]
        v = [rng.uniform(-2, 2) for _ in range(dim)]
        # element-by-element brute force with plain accumulation
        dot = 0.0
        nu = 0.0
        nv = 0.0
        for a, b in zip(u, v):
            dot += a * b
            nu += a * a
            nv += b * b
        expected = dot / (math.sqrt(nu) * math.sqrt(nv))
        assert cosine(u, v) == pytest.approx(expected, abs=1e-9)


def test_cosine_symmetry_is_exact():
    rng = random.Random(23)
    for _ in range(50):
        u = [rng.uniform(-1, 1) for _ in range(8)]
        v = [rng.uniform(-1, 1) for _ in range(8)]
        assert cosine(u, v) == cosine(v, u)


def test_cosine_positive_scale_invariance():
    rng = random.Random(29)
    for _ in range(50):
        u = [rng.uniform(-1, 1) for _ in range(6)]
        v = [rng.uniform(-1, 1) for _ in range(6)]
        a, b = rng.uniform(0.1, 10), rng.uniform(0.1, 10)
        scaled = cosine([a * x for x in u], [b * x for x in v])
        assert scaled == pytest.approx(cosine(u, v), abs=1e-9)


def test_cosine_zero_vector_is_undefined():
    with pytest.raises(UndefinedSimilarityError):
        cosine((0.0, 0.0), (1.0, 0.0))


def test_cosine_dimension_mismatch():
    with pytest.raises(InputError):
        cosine((1.0,), (1.0, 0.0))


def test_cosine_stays_in_range():
    v = [0.1] * 64
    assert -1.0 <= cosine(v, v) <= 1.0


# ---------------------------------------------------------------------------
# similarity analysis
# ---------------------------------------------------------------------------


def _scripted_generation(task, example, config, seed, texts):
    """Stub script whose k generation slots return the given texts."""
    script = StubScript()
    targets = assign_classes(config.k, task.classes, seed)
    for slot, (target, text) in enumerate(zip(targets, texts)):
        prompt = render_generation_prompt(task, example, target, config.conditioning_mode)
        base = generation_seed(seed, slot, config.sampling.retry_limit)
        script.add_completion(prompt, base, text)
    return script


def test_similarity_mean_one_when_embeddings_match(sst2):
    example = Example(id="000002", text1="fine work .")
    config = RunConfig(method="sg-icl", k=2, seeds=(0,))
    script = _scripted_generation(sst2, example, config, 0, ["alpha .", "beta ."])
    for text in ("fine work .", "alpha .", "beta ."):
        script.add_embedding(text, (1.0, 0.0))
    backend = StubBackend(script)
    report = similarity_analysis(sst2, [example], "input-and-class", config, backend)
    assert report.mean == 1.0
    assert report.per_pair == (1.0, 1.0)
    assert report.conditioning_mode == "input-and-class"


def test_similarity_two_pairs_average(sst2):
    example = Example(id="000002", text1="fine work .")
    config = RunConfig(method="sg-icl", k=2, seeds=(0,))
    script = _scripted_generation(sst2, example, config, 0, ["alpha .", "beta ."])
    script.add_embedding("fine work .", (1.0, 0.0))
    # cosines against (1, 0): 1/5 = 0.2 and 2/5 = 0.4
    script.add_embedding("alpha .", (1.0, math.sqrt(24.0)))
    script.add_embedding("beta .", (2.0, math.sqrt(21.0)))
    backend = StubBackend(script)
    report = similarity_analysis(sst2, [example], "input-and-class", config, backend)
    assert report.per_pair == pytest.approx((0.2, 0.4), abs=1e-9)
    assert report.mean == pytest.approx(0.3, abs=1e-9)


def test_similarity_compares_hypothesis_for_pair_tasks(rte):
    example = Example(id="000002", text1="the premise .", text2="the hypothesis .")
    config = RunConfig(method="sg-icl", k=1, seeds=(0,))
    script = _scripted_generation(rte, example, config, 0, ["generated claim ."])
    script.add_embedding("the hypothesis .", (1.0, 0.0))
    script.add_embedding("the premise .", (0.0, 1.0))  # must NOT be compared
    script.add_embedding("generated claim .", (1.0, 0.0))
    backend = StubBackend(script)
    report = similarity_analysis(rte, [example], "input-and-class", config, backend)
    assert report.mean == 1.0


def test_similarity_uses_separate_embed_backend(sst2):
    example = Example(id="000002", text1="fine work .")
    config = RunConfig(method="sg-icl", k=1, seeds=(0,))
    gen_backend = StubBackend(
        _scripted_generation(sst2, example, config, 0, ["vivid piece ."])
    )
    embed_script = StubScript()
    embed_script.add_embedding("fine work .", (1.0, 0.0))
    embed_script.add_embedding("vivid piece .", (1.0, 0.0))
    embed_backend = StubBackend(embed_script)
    report = similarity_analysis(
        sst2, [example], "input-and-class", config, gen_backend,
        embed_backend=embed_backend,
    )
    assert report.mean == 1.0
    assert embed_backend.embed_calls == 2
    assert gen_backend.embed_calls == 0


def test_similarity_class_only_mode_reaches_class_only_prompts(sst2, tmp_path):
    example = Example(id="000002", text1="fine work .")
    config = RunConfig(method="sg-icl", k=2, seeds=(0,))
    backend = StubBackend(StubScript())
    cache = DemonstrationCache(tmp_path / "cache")
    report = similarity_analysis(
        sst2, [example], "class-only", config, backend, cache=cache
    )
    assert report.conditioning_mode == "class-only"
    assert len(report.per_pair) == 2
    # cached entries carry the analysis conditioning mode, not the config's
    cached = list(cache.root.glob("*.json"))
    assert len(cached) == 2


# ---------------------------------------------------------------------------
# shot sweep
# ---------------------------------------------------------------------------


def _sweep_fixture():
    dataset = [
        Example(id=f"{i + 2:06d}", text1=f"eval text {i} .", gold=i % 2) for i in range(4)
    ]
    pool = [
        Example(id=f"t{i:04d}", text1=f"train text {i} .", gold=i % 2) for i in range(6)
    ]
    config = RunConfig(method="sg-icl", k=4, seeds=(0, 1), sampling=SamplingConfig())
    return dataset, pool, config


def test_shot_sweep_shapes(sst2):
    dataset, pool, config = _sweep_fixture()
    backend = StubBackend(StubScript(score_mode="hash"))
    reports = shot_sweep(
        sst2, dataset, [1, 2, 3], config, backend, train_pool=pool
    )
    assert [r.method for r in reports] == ["few-shot"] * 3 + ["sg-icl"]
    assert [r.k for r in reports] == [1, 2, 3, 4]
    assert all(len(r.per_seed_accuracy) == 2 for r in reports)


def test_shot_sweep_records_reproduce_report_accuracies(sst2):
    dataset, pool, config = _sweep_fixture()
    backend = StubBackend(StubScript(score_mode="hash"))
    recorded = []
    reports = shot_sweep(
        sst2, dataset, [1, 2], config, backend, train_pool=pool,
        record=lambda cfg, results: recorded.append((cfg, list(results))),
    )
    golds = {ex.id: ex.gold for ex in dataset}
    assert len(recorded) == len(reports)
    for (cfg, results), report in zip(recorded, reports):
        assert cfg.method == report.method and cfg.k == report.k
        for seed, expected in zip(report.seeds, report.per_seed_accuracy):
            rows = [r for r in results if r.seed == seed]
            recomputed = accuracy(
                [r.prediction for r in rows], [golds[r.example_id] for r in rows]
            )
            assert recomputed == expected


def test_shot_sweep_requires_increasing_k(sst2, stub_backend):
    dataset, pool, config = _sweep_fixture()
    with pytest.raises(InputError):
        shot_sweep(sst2, dataset, [2, 2], config, stub_backend, train_pool=pool)
    with pytest.raises(InputError):
        shot_sweep(sst2, dataset, [3, 1], config, stub_backend, train_pool=pool)
    with pytest.raises(InputError):
        shot_sweep(sst2, dataset, [], config, stub_backend, train_pool=pool)


# ---------------------------------------------------------------------------
# sample worth
# ---------------------------------------------------------------------------


def test_sample_worth_linear_interpolation_oracle():
    worth = sample_worth({4: 0.80, 5: 0.84}, 0.82, 8)
    # hand computation: m = 4 + (0.82 - 0.80) / (0.84 - 0.80) = 4.5
    assert worth.gold_equivalent == 4.5
    assert worth.worth == 0.5625
    assert worth.clamped is False


def test_sample_worth_exact_hit():
    worth = sample_worth({4: 0.80, 5: 0.84}, 0.84, 8)
    assert worth.gold_equivalent == 5.0
    assert worth.worth == 0.625
    assert worth.clamped is False


def test_sample_worth_clamps_above_the_sweep():
    worth = sample_worth({1: 0.5, 2: 0.6}, 0.9, 8)
    assert worth.gold_equivalent == 2.0
    assert worth.clamped is True


def test_sample_worth_clamps_below_the_sweep():
    worth = sample_worth({2: 0.5, 3: 0.6}, 0.4, 8)
    assert worth.gold_equivalent == 2.0
    assert worth.clamped is True


def test_sample_worth_equal_at_min_k_is_not_clamped():
    worth = sample_worth({2: 0.5, 3: 0.6}, 0.5, 8)
    assert worth.gold_equivalent == 2.0
    assert worth.clamped is False


def test_sample_worth_handles_non_monotone_sweeps():
    sweep = {1: 0.5, 2: 0.9, 3: 0.6, 4: 0.95}
    assert sample_worth(sweep, 0.7, 8).gold_equivalent == pytest.approx(1.5)
    # 0.92 is above the first peak; the first catch-up is in the last segment
    m = sample_worth(sweep, 0.92, 8).gold_equivalent
    assert 3.0 < m < 4.0


def test_sample_worth_is_monotone_in_sgicl_accuracy():
    rng = random.Random(41)
    for _ in range(100):
        ks = sorted(rng.sample(range(1, 10), rng.randint(2, 5)))
        sweep = {k: round(rng.random(), 3) for k in ks}
        lo, hi = sorted((round(rng.random(), 3), round(rng.random(), 3)))
        assert (
            sample_worth(sweep, lo, 8).gold_equivalent
            <= sample_worth(sweep, hi, 8).gold_equivalent
        )


def test_sample_worth_input_validation():
    with pytest.raises(InputError):
        sample_worth({}, 0.5, 8)
    with pytest.raises(InputError):
        sample_worth({1: 0.5}, 0.5, 0)
