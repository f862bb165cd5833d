"""Accuracy aggregation, similarity analysis, shot sweeps, and the
sample-worth interpolation.

Aggregation is pure computation over collected results. The sample-worth
interpolation treats accuracies as exact decimals (they are rationals:
correct/total), so hand-computed oracle values match exactly.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, replace
from fractions import Fraction
from math import fsum, sqrt
from typing import Any, Callable, Mapping, Sequence

from .backend import Backend
from .cache import DemonstrationCache
from .core import Example, Prediction, RunConfig, TaskSpec
from .errors import InputError, UndefinedSimilarityError
from .pipeline import RunResult, run_method, self_generate


def accuracy(preds: Sequence[Prediction], golds: Sequence[int]) -> float:
    """Fraction of predictions whose argmax class equals the gold class."""
    if len(preds) != len(golds):
        raise InputError(
            f"predictions ({len(preds)}) and golds ({len(golds)}) differ in length"
        )
    if not preds:
        raise InputError("cannot compute accuracy of an empty prediction list")
    correct = sum(1 for p, g in zip(preds, golds) if p.predicted == g)
    return correct / len(preds)


@dataclass(frozen=True)
class MethodReport:
    """Seed-aggregated accuracy for one (task, method, k) configuration."""

    task: str
    method: str
    k: int
    variant: str
    seeds: tuple[int, ...]
    per_seed_accuracy: tuple[float, ...]
    mean: float
    std: float
    min_accuracy: float
    max_accuracy: float
    conditioning_mode: str | None = None
    n_examples: int = 0

    def __post_init__(self):
        if len(self.per_seed_accuracy) != len(self.seeds):
            raise InputError("need exactly one accuracy per seed")

    @classmethod
    def from_per_seed(
        cls,
        *,
        task: str,
        method: str,
        k: int,
        variant: str,
        seeds: Sequence[int],
        per_seed_accuracy: Sequence[float],
        conditioning_mode: str | None = None,
        n_examples: int = 0,
    ) -> MethodReport:
        values = tuple(float(a) for a in per_seed_accuracy)
        if not values:
            raise InputError("need at least one per-seed accuracy")
        return cls(
            task=task,
            method=method,
            k=k,
            variant=variant,
            seeds=tuple(seeds),
            per_seed_accuracy=values,
            mean=statistics.fmean(values),
            std=statistics.stdev(values) if len(values) > 1 else 0.0,
            min_accuracy=min(values),
            max_accuracy=max(values),
            conditioning_mode=conditioning_mode,
            n_examples=n_examples,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "task": self.task,
            "method": self.method,
            "k": self.k,
            "variant": self.variant,
            "conditioning_mode": self.conditioning_mode,
            "seeds": list(self.seeds),
            "per_seed_accuracy": list(self.per_seed_accuracy),
            "mean": self.mean,
            "std": self.std,
            "min": self.min_accuracy,
            "max": self.max_accuracy,
            "n_examples": self.n_examples,
        }


def build_report(
    task: TaskSpec,
    config: RunConfig,
    results: Sequence[RunResult],
    golds: Mapping[str, int],
) -> MethodReport:
    """Aggregate run results into per-seed accuracies and a MethodReport."""
    missing = [r.example_id for r in results if r.example_id not in golds]
    if missing:
        raise InputError(f"no gold labels for example(s): {missing[:5]}")
    per_seed = []
    for seed in config.seeds:
        rows = [r for r in results if r.seed == seed]
        if not rows:
            raise InputError(f"no results recorded for seed {seed}")
        per_seed.append(
            accuracy([r.prediction for r in rows], [golds[r.example_id] for r in rows])
        )
    n_examples = len({r.example_id for r in results})
    return MethodReport.from_per_seed(
        task=task.name,
        method=config.method,
        k=config.k,
        variant=config.variant,
        seeds=config.seeds,
        per_seed_accuracy=per_seed,
        conditioning_mode=config.conditioning_mode if config.method == "sg-icl" else None,
        n_examples=n_examples,
    )


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    """Cosine similarity dot(u, v) / (|u| |v|), clamped into [-1, 1]."""
    if len(u) != len(v):
        raise InputError(f"dimension mismatch: {len(u)} vs {len(v)}")
    if not u:
        raise InputError("vectors must be non-empty")
    dot = fsum(a * b for a, b in zip(u, v))
    norm_u = sqrt(fsum(a * a for a in u))
    norm_v = sqrt(fsum(b * b for b in v))
    if norm_u == 0.0 or norm_v == 0.0:
        raise UndefinedSimilarityError("cosine similarity is undefined for zero vectors")
    return max(-1.0, min(1.0, dot / (norm_u * norm_v)))


@dataclass(frozen=True)
class SimilarityReport:
    """Mean cosine similarity between inputs and their generated demos."""

    task: str
    conditioning_mode: str
    mean: float
    per_pair: tuple[float, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "task": self.task,
            "conditioning_mode": self.conditioning_mode,
            "mean": self.mean,
            "n_pairs": len(self.per_pair),
            "per_pair": list(self.per_pair),
        }


def similarity_analysis(
    task: TaskSpec,
    examples: Sequence[Example],
    mode: str,
    config: RunConfig,
    backend: Backend,
    *,
    embed_backend: Backend | None = None,
    cache: DemonstrationCache | None = None,
) -> SimilarityReport:
    """Embed each input and its generated demonstrations; report the mean
    cosine similarity over all (input, demonstration) pairs.

    For sentence-pair tasks the compared input text is the hypothesis field.
    Demonstrations come from the cache or are generated with the first seed.
    """
    if not examples:
        raise InputError("similarity analysis needs at least one example")
    embedder = embed_backend if embed_backend is not None else backend
    gen_config = replace(config, method="sg-icl", conditioning_mode=mode)
    seed = gen_config.seeds[0]
    per_pair: list[float] = []
    for example in examples:
        demo_set = self_generate(task, example, gen_config, backend, seed, cache)
        input_text = example.text2 if task.arity == "sentence-pair" else example.text1
        input_vec = embedder.embed(input_text)
        for demo, _ in demo_set.demos:
            per_pair.append(cosine(input_vec, embedder.embed(demo.generated_text)))
    if not per_pair:
        raise InputError("no (input, demonstration) pairs to compare")
    return SimilarityReport(
        task=task.name,
        conditioning_mode=mode,
        mean=statistics.fmean(per_pair),
        per_pair=tuple(per_pair),
    )


def shot_sweep(
    task: TaskSpec,
    dataset: Sequence[Example],
    k_values: Sequence[int],
    config: RunConfig,
    backend: Backend,
    *,
    train_pool,
    cache: DemonstrationCache | None = None,
    record: Callable[[RunConfig, Sequence[RunResult]], None] | None = None,
) -> list[MethodReport]:
    """Few-shot reports for each k, plus the SG-ICL report at ``config.k``.

    ``record``, when given, is called with (run config, results) after each
    method run so callers can write audit records without re-running.
    """
    ks = [int(k) for k in k_values]
    if not ks:
        raise InputError("k_values must be non-empty")
    if any(k < 1 for k in ks) or any(a >= b for a, b in zip(ks, ks[1:])):
        raise InputError("k_values must be strictly increasing and >= 1")
    golds = _golds_of(dataset)

    reports: list[MethodReport] = []
    for k in ks:
        few_config = replace(config, method="few-shot", k=k)
        results = run_method(task, dataset, few_config, backend, train_pool=train_pool)
        if record is not None:
            record(few_config, results)
        reports.append(build_report(task, few_config, results, golds))

    sg_config = replace(config, method="sg-icl")
    results = run_method(task, dataset, sg_config, backend, cache=cache)
    if record is not None:
        record(sg_config, results)
    reports.append(build_report(task, sg_config, results, golds))
    return reports


def _golds_of(dataset: Sequence[Example]) -> dict[str, int]:
    golds = {}
    for example in dataset:
        if example.gold is None:
            raise InputError(f"example {example.id!r} has no gold label")
        golds[example.id] = example.gold
    return golds


@dataclass(frozen=True)
class SampleWorth:
    """How many gold demonstrations one SG-ICL context is worth."""

    gold_equivalent: float  # interpolated k at which few-shot matches SG-ICL
    worth: float  # gold_equivalent / k_sgicl
    clamped: bool  # SG-ICL fell outside the swept accuracy range

    def to_dict(self) -> dict[str, Any]:
        return {
            "gold_equivalent": self.gold_equivalent,
            "worth": self.worth,
            "clamped": self.clamped,
        }


def sample_worth(
    sweep: Mapping[int, float], sgicl_acc: float, k_sgicl: int
) -> SampleWorth:
    """Smallest (linearly interpolated) gold-sample count at which few-shot
    accuracy reaches the SG-ICL accuracy, clamped to the swept range.

    Interpolation runs on exact decimal values so that e.g. a sweep of
    {4: 0.80, 5: 0.84} against 0.82 yields exactly 4.5.
    """
    if not sweep:
        raise InputError("sweep must be non-empty")
    if k_sgicl < 1:
        raise InputError("k_sgicl must be >= 1")
    points = sorted((int(k), _exact(v)) for k, v in sweep.items())
    ks = [k for k, _ in points]
    if len(set(ks)) != len(ks):
        raise InputError("sweep has duplicate k values")
    target = _exact(sgicl_acc)

    if target <= points[0][1]:
        return _worth(Fraction(points[0][0]), k_sgicl, clamped=target < points[0][1])
    for (k1, a1), (k2, a2) in zip(points, points[1:]):
        # first knot reaching the target closes an upward crossing; between
        # knots the piecewise-linear curve stays within [min(a1,a2), max(a1,a2)]
        if a2 >= target:
            m = k1 + (target - a1) / (a2 - a1) * (k2 - k1)
            return _worth(m, k_sgicl, clamped=False)
    return _worth(Fraction(points[-1][0]), k_sgicl, clamped=True)


def _exact(value: float) -> Fraction:
    return Fraction(str(float(value)))


def _worth(m: Fraction, k_sgicl: int, *, clamped: bool) -> SampleWorth:
    return SampleWorth(
        gold_equivalent=float(m), worth=float(m / k_sgicl), clamped=clamped
    )


__all__ = [
    "MethodReport",
    "SampleWorth",
    "SimilarityReport",
    "accuracy",
    "build_report",
    "cosine",
    "sample_worth",
    "shot_sweep",
    "similarity_analysis",
]
