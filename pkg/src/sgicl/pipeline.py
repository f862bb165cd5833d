"""The two SG-ICL steps (self-generation and inference) plus the zero-shot
and gold few-shot prediction paths.

Determinism contract: on the stub backend the output of ``run_method`` is a
pure function of (dataset, config, stub script). Per-example work may run
concurrently up to the backend's in-flight limit; results are always
reassembled by example index, never by completion order.
"""

from __future__ import annotations

import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

from .backend import Backend, fingerprint
from .cache import CacheKey, DemonstrationCache
from .core import (
    Example,
    GeneratedDemonstration,
    Prediction,
    Provenance,
    RunConfig,
    TaskSpec,
)
from .errors import (
    ConfigurationError,
    DegenerateGenerationError,
    GenerationFailedError,
    InputError,
    ScoringError,
)
from .templating import render_generation_prompt, render_inference_prompt

logger = logging.getLogger(__name__)

# Seeds for the generation slots of one run seed: slot bases are spaced by
# (retry_limit + 1) so retry sub-seeds never collide with the next slot, and
# run seeds are spaced far enough apart for any practical k.
_SEED_STRIDE = 100_003


@dataclass(frozen=True)
class DemonstrationSet:
    """The ordered in-context demonstrations used for one prediction."""

    source_example_id: str
    demos: tuple[tuple[Example | GeneratedDemonstration, int], ...]
    method: str
    seed: int
    dropped: tuple[tuple[int, int], ...] = ()  # (slot index, target class)


@dataclass(frozen=True)
class RunResult:
    """One prediction row: (example, seed) with its audit trail."""

    example_id: str
    seed: int
    prediction: Prediction
    prompt_fingerprint: str
    demos: DemonstrationSet | None = None


def assign_classes(k: int, classes: Sequence[str], seed: int) -> list[int]:
    """Round-robin class ids for k generation slots, starting at a
    seed-derived offset; per-class counts differ by at most 1."""
    if k < 1:
        raise InputError("k must be >= 1")
    n = len(classes)
    if n < 2:
        raise InputError("need at least 2 classes")
    offset = random.Random(seed).randrange(n)
    return [(offset + i) % n for i in range(k)]


def generation_seed(run_seed: int, slot: int, retry_limit: int) -> int:
    """Base sampling seed for one generation slot; retries increment it."""
    return run_seed * _SEED_STRIDE + slot * (retry_limit + 1)


def _require_arity(task: TaskSpec, example: Example) -> None:
    if not example.matches_arity(task):
        raise InputError(
            f"example {example.id!r} does not match task {task.name!r} "
            f"arity ({task.arity})"
        )


def _generate_one(
    task: TaskSpec,
    example: Example,
    target: int,
    config: RunConfig,
    backend: Backend,
    base_seed: int,
    template_hash: str,
) -> GeneratedDemonstration | None:
    prompt = render_generation_prompt(task, example, target, config.conditioning_mode)
    carried = example.text1 if task.arity == "sentence-pair" else None
    for attempt in range(config.sampling.retry_limit + 1):
        sub_seed = base_seed + attempt
        try:
            raw = backend.complete(prompt, config.sampling, sub_seed)
        except GenerationFailedError as exc:
            logger.warning("generation attempt failed (seed %d): %s", sub_seed, exc)
            continue
        text = raw.strip()
        if not text:
            continue
        if any(stop in text for stop in config.sampling.stop_sequences):
            continue
        return GeneratedDemonstration(
            source_example_id=example.id,
            target_class=target,
            generated_text=text,
            conditioning_mode=config.conditioning_mode,
            provenance=Provenance(
                backend_id=backend.id, seed=sub_seed, template_hash=template_hash
            ),
            carried_premise=carried,
        )
    return None


def self_generate(
    task: TaskSpec,
    example: Example,
    config: RunConfig,
    backend: Backend,
    seed: int,
    cache: DemonstrationCache | None = None,
) -> DemonstrationSet:
    """Generate the k-demonstration context for one test example.

    Consults the cache per slot before calling the backend. Failed slots are
    dropped with a warning; if more than half drop, the whole set fails.
    """
    if config.method != "sg-icl":
        raise ConfigurationError("self_generate requires a config with method sg-icl")
    _require_arity(task, example)
    targets = assign_classes(config.k, task.classes, seed)
    template_hash = task.generation_template.hash()

    demos: list[tuple[GeneratedDemonstration, int]] = []
    dropped: list[tuple[int, int]] = []
    for slot, target in enumerate(targets):
        base_seed = generation_seed(seed, slot, config.sampling.retry_limit)
        key = CacheKey(
            task=task.name,
            example_id=example.id,
            target_class=target,
            conditioning_mode=config.conditioning_mode,
            temperature=config.sampling.temperature,
            seed=base_seed,
            template_hash=template_hash,
            backend_id=backend.id,
        )
        demo = cache.get(key) if cache is not None else None
        if demo is None:
            demo = _generate_one(
                task, example, target, config, backend, base_seed, template_hash
            )
            if demo is None:
                logger.warning(
                    "dropping demonstration slot %d (class %s) for example %s: "
                    "no valid generation after %d attempt(s)",
                    slot,
                    task.classes[target],
                    example.id,
                    config.sampling.retry_limit + 1,
                )
                dropped.append((slot, target))
                continue
            if cache is not None:
                cache.put(key, demo)
        demos.append((demo, target))

    if dropped and 2 * len(dropped) > config.k:
        raise DegenerateGenerationError(
            f"{len(dropped)} of {config.k} demonstration slots failed for "
            f"example {example.id!r}; refusing a mostly-empty context"
        )
    if config.shuffle_demos:
        random.Random(f"demo-order:{seed}").shuffle(demos)
    return DemonstrationSet(
        source_example_id=example.id,
        demos=tuple(demos),
        method="sg-icl",
        seed=seed,
        dropped=tuple(dropped),
    )


def predict(
    task: TaskSpec,
    demos: DemonstrationSet | None,
    test: Example,
    variant: str,
    backend: Backend,
) -> Prediction:
    """Score the verbalizer words given demonstrations plus the test query."""
    prediction, _ = predict_with_prompt(task, demos, test, variant, backend)
    return prediction


def predict_with_prompt(
    task: TaskSpec,
    demos: DemonstrationSet | None,
    test: Example,
    variant: str,
    backend: Backend,
) -> tuple[Prediction, str]:
    _require_arity(task, test)
    demo_pairs = demos.demos if demos is not None else ()
    prompt = render_inference_prompt(task, demo_pairs, test, variant)
    scores = backend.score_continuations(prompt, list(task.verbalizer))
    if len(scores) != task.n_classes:
        raise ScoringError(
            f"backend returned {len(scores)} scores for {task.n_classes} candidates"
        )
    return Prediction.from_scores(scores), prompt


def _resolve_train_pool(train_pool) -> list[Example] | None:
    if train_pool is None:
        return None
    if callable(train_pool):
        train_pool = train_pool()
    return list(train_pool)


def _map_examples(backend: Backend, dataset: Sequence[Example], work) -> list:
    workers = min(getattr(backend, "max_in_flight", 1) or 1, len(dataset))
    if workers <= 1:
        return [work(example) for example in dataset]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(work, dataset))


def run_method(
    task: TaskSpec,
    dataset: Sequence[Example],
    config: RunConfig,
    backend: Backend,
    *,
    cache: DemonstrationCache | None = None,
    train_pool: Sequence[Example] | Callable[[], Sequence[Example]] | None = None,
) -> list[RunResult]:
    """Run one method over the dataset for every seed (seed-major order).

    ``train_pool`` may be a sequence or a zero-argument accessor; it is only
    resolved on the few-shot path, so SG-ICL runs can prove they never touch
    the training split.
    """
    if not dataset:
        raise InputError("dataset must be non-empty")
    for example in dataset:
        _require_arity(task, example)

    if config.method == "zero-shot":
        return _run_zero_shot(task, dataset, config, backend)
    if config.method == "few-shot":
        return _run_few_shot(task, dataset, config, backend, train_pool)
    return _run_sg_icl(task, dataset, config, backend, cache)


def _run_zero_shot(task, dataset, config, backend) -> list[RunResult]:
    def work(example: Example):
        prediction, prompt = predict_with_prompt(
            task, None, example, config.variant, backend
        )
        return prediction, fingerprint(prompt)

    # Zero-shot predictions are seed-independent: compute once per example,
    # then emit one row per seed so reports aggregate uniformly.
    scored = _map_examples(backend, dataset, work)
    results = []
    for seed in config.seeds:
        for example, (prediction, fp) in zip(dataset, scored):
            results.append(
                RunResult(
                    example_id=example.id,
                    seed=seed,
                    prediction=prediction,
                    prompt_fingerprint=fp,
                )
            )
    return results


def _run_few_shot(task, dataset, config, backend, train_pool) -> list[RunResult]:
    pool = _resolve_train_pool(train_pool)
    if not pool:
        raise ConfigurationError("few-shot runs require a non-empty training pool")
    if any(example.gold is None for example in pool):
        raise ConfigurationError("few-shot training pool must carry gold labels")
    if config.k > len(pool):
        raise ConfigurationError(
            f"k={config.k} exceeds the training pool size ({len(pool)})"
        )

    results = []
    for seed in config.seeds:
        sampled = random.Random(f"gold-demos:{seed}").sample(pool, config.k)
        demo_set = DemonstrationSet(
            source_example_id="",
            demos=tuple((example, example.gold) for example in sampled),
            method="few-shot",
            seed=seed,
        )

        def work(example: Example, demo_set=demo_set):
            prediction, prompt = predict_with_prompt(
                task, demo_set, example, config.variant, backend
            )
            return prediction, fingerprint(prompt)

        scored = _map_examples(backend, dataset, work)
        for example, (prediction, fp) in zip(dataset, scored):
            results.append(
                RunResult(
                    example_id=example.id,
                    seed=seed,
                    prediction=prediction,
                    prompt_fingerprint=fp,
                    demos=demo_set,
                )
            )
    return results


def _run_sg_icl(task, dataset, config, backend, cache) -> list[RunResult]:
    results = []
    for seed in config.seeds:

        def work(example: Example, seed=seed):
            demo_set = self_generate(task, example, config, backend, seed, cache)
            prediction, prompt = predict_with_prompt(
                task, demo_set, example, config.variant, backend
            )
            return RunResult(
                example_id=example.id,
                seed=seed,
                prediction=prediction,
                prompt_fingerprint=fingerprint(prompt),
                demos=demo_set,
            )

        results.extend(_map_examples(backend, dataset, work))
    return results


__all__ = [
    "DemonstrationSet",
    "RunResult",
    "assign_classes",
    "generation_seed",
    "predict",
    "predict_with_prompt",
    "run_method",
    "self_generate",
]
