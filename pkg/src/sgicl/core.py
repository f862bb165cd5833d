"""Domain types shared by every other module, plus the built-in tasks.

All types are immutable after construction (frozen dataclasses with tuple
fields) and safe to share across concurrent workers. Class ids are zero-based
indices into ``TaskSpec.classes``; the verbalizer is the tuple of label words
aligned with that order, which makes tie-breaking and serialization
deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from .errors import ConfigurationError, InputError, InvalidClassError, UnknownTaskError
from .templating import (
    GenerationTemplate,
    InferenceTemplate,
    allowed_placeholders,
    placeholders,
)

ARITIES = ("single-sentence", "sentence-pair")
METHODS = ("zero-shot", "few-shot", "sg-icl")


@dataclass(frozen=True)
class TaskSpec:
    """A classification task: classes, verbalizer, and its prompt templates."""

    name: str
    arity: str
    classes: tuple[str, ...]
    verbalizer: tuple[str, ...]
    field_labels: tuple[str, ...]
    manual_template: InferenceTemplate
    minimal_template: InferenceTemplate
    generation_template: GenerationTemplate

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "verbalizer", tuple(self.verbalizer))
        object.__setattr__(self, "field_labels", tuple(self.field_labels))
        if self.arity not in ARITIES:
            raise ConfigurationError(f"unknown arity {self.arity!r}; expected one of {ARITIES}")
        if len(self.classes) < 2:
            raise ConfigurationError(f"task {self.name!r} needs at least 2 classes")
        if len(set(self.classes)) != len(self.classes):
            raise ConfigurationError(f"task {self.name!r} has duplicate class names")
        if len(self.verbalizer) != len(self.classes):
            raise ConfigurationError(
                f"task {self.name!r}: verbalizer must map every class to a word"
            )
        if any(not w.strip() for w in self.verbalizer):
            raise ConfigurationError(f"task {self.name!r} has an empty verbalizer word")
        if len(set(self.verbalizer)) != len(self.verbalizer):
            raise ConfigurationError(
                f"task {self.name!r}: verbalizer words must be unique across classes"
            )
        expected_labels = 2 if self.arity == "sentence-pair" else 1
        if len(self.field_labels) != expected_labels:
            raise ConfigurationError(
                f"task {self.name!r} needs {expected_labels} field label(s)"
            )
        if self.manual_template.variant != "manual" or self.minimal_template.variant != "minimal":
            raise ConfigurationError(f"task {self.name!r}: template variants mislabeled")
        allowed = allowed_placeholders(self.arity)
        patterns = (
            self.manual_template.demo_pattern,
            self.minimal_template.demo_pattern,
            self.generation_template.exemplar_pattern,
            self.generation_template.directive_pattern,
            self.generation_template.class_only_directive,
        )
        for pattern in patterns:
            unknown = placeholders(pattern) - allowed
            if unknown:
                raise ConfigurationError(
                    f"task {self.name!r}: placeholder(s) {sorted(unknown)} do not "
                    f"resolve to a field or verbalizer slot of a {self.arity} task"
                )

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def inference_template(self, variant: str) -> InferenceTemplate:
        if variant == "manual":
            return self.manual_template
        if variant == "minimal":
            return self.minimal_template
        raise ConfigurationError(f"unknown template variant {variant!r}")

    def verbalizer_word(self, class_id: int) -> str:
        if not isinstance(class_id, int) or not 0 <= class_id < self.n_classes:
            raise InvalidClassError(
                f"class id {class_id!r} is not in task {self.name!r} "
                f"(0..{self.n_classes - 1})"
            )
        return self.verbalizer[class_id]

    def class_index(self, name: str) -> int:
        try:
            return self.classes.index(name)
        except ValueError:
            raise InvalidClassError(
                f"class {name!r} is not in task {self.name!r}"
            ) from None


@dataclass(frozen=True)
class Example:
    """One dataset instance; ``text2`` is present only for sentence-pair tasks."""

    id: str
    text1: str
    text2: str | None = None
    gold: int | None = None

    def __post_init__(self):
        if not self.text1 or not self.text1.strip():
            raise InputError(f"example {self.id!r}: text1 must be non-empty")

    def matches_arity(self, task: TaskSpec) -> bool:
        if task.arity == "sentence-pair":
            return bool(self.text2 and self.text2.strip())
        return self.text2 is None


@dataclass(frozen=True)
class Provenance:
    """Where a generated demonstration came from (cache audit trail)."""

    backend_id: str
    seed: int
    template_hash: str


@dataclass(frozen=True)
class GeneratedDemonstration:
    """A self-generated in-context sample bound to its source example."""

    source_example_id: str
    target_class: int
    generated_text: str
    conditioning_mode: str
    provenance: Provenance
    carried_premise: str | None = None

    def __post_init__(self):
        if not self.generated_text or not self.generated_text.strip():
            raise InputError("generated_text must be non-empty after trimming")

    def to_dict(self) -> dict[str, Any]:
        return {
            "source_example_id": self.source_example_id,
            "target_class": self.target_class,
            "generated_text": self.generated_text,
            "conditioning_mode": self.conditioning_mode,
            "carried_premise": self.carried_premise,
            "provenance": {
                "backend_id": self.provenance.backend_id,
                "seed": self.provenance.seed,
                "template_hash": self.provenance.template_hash,
            },
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> GeneratedDemonstration:
        prov = d["provenance"]
        return cls(
            source_example_id=d["source_example_id"],
            target_class=int(d["target_class"]),
            generated_text=d["generated_text"],
            conditioning_mode=d["conditioning_mode"],
            carried_premise=d.get("carried_premise"),
            provenance=Provenance(
                backend_id=prov["backend_id"],
                seed=int(prov["seed"]),
                template_hash=prov["template_hash"],
            ),
        )


@dataclass(frozen=True)
class Prediction:
    """Per-class log-probability scores plus the argmax class.

    ``scores[i]`` is the log-probability of class id ``i``; ties break toward
    the lowest class index.
    """

    scores: tuple[float, ...]
    predicted: int

    def __post_init__(self):
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        if not self.scores:
            raise InputError("Prediction needs at least one class score")
        if self.predicted != _argmax_first(self.scores):
            raise InputError(
                "predicted class must be the argmax of scores "
                "(ties break to the lowest class index)"
            )

    @classmethod
    def from_scores(cls, scores) -> Prediction:
        scores = tuple(float(s) for s in scores)
        if not scores:
            raise InputError("scores must be non-empty")
        if any(not math.isfinite(s) for s in scores):
            raise InputError("scores must all be finite")
        return cls(scores=scores, predicted=_argmax_first(scores))

    def score_map(self, task: TaskSpec) -> dict[str, float]:
        """Scores keyed by verbalizer word, for reports and audit records."""
        return {task.verbalizer[i]: s for i, s in enumerate(self.scores)}


def _argmax_first(scores: tuple[float, ...]) -> int:
    best = 0
    for i, s in enumerate(scores):
        if s > scores[best]:
            best = i
    return best


@dataclass(frozen=True)
class SamplingConfig:
    """Sampling parameters for demonstration generation."""

    temperature: float = 0.5
    max_new_tokens: int = 64
    stop_sequences: tuple[str, ...] = ("\n",)
    retry_limit: int = 3

    def __post_init__(self):
        object.__setattr__(self, "stop_sequences", tuple(self.stop_sequences))
        if not self.temperature > 0:
            raise ConfigurationError("temperature must be > 0")
        if self.max_new_tokens < 1:
            raise ConfigurationError("max_new_tokens must be >= 1")
        if self.retry_limit < 0:
            raise ConfigurationError("retry_limit must be >= 0")
        if any(not s for s in self.stop_sequences):
            raise ConfigurationError("stop sequences must be non-empty strings")


@dataclass(frozen=True)
class RunConfig:
    """One evaluation run: method, demonstration count, seeds, and templates."""

    method: str
    k: int = 8
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    variant: str = "manual"
    conditioning_mode: str = "input-and-class"
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    shuffle_demos: bool = True

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.method not in METHODS:
            raise ConfigurationError(
                f"unknown method {self.method!r}; expected one of {METHODS}"
            )
        if self.k < 0:
            raise ConfigurationError("k must be non-negative")
        if self.method == "zero-shot" and self.k != 0:
            raise ConfigurationError("zero-shot runs must have k = 0")
        if not self.seeds:
            raise ConfigurationError("seeds must be non-empty")
        if self.variant not in ("manual", "minimal"):
            raise ConfigurationError(f"unknown template variant {self.variant!r}")
        if self.conditioning_mode not in ("class-only", "input-and-class"):
            raise ConfigurationError(
                f"unknown conditioning mode {self.conditioning_mode!r}"
            )


def _sst_templates() -> tuple[InferenceTemplate, InferenceTemplate, GenerationTemplate]:
    manual = InferenceTemplate(
        demo_pattern="{field_label_1} : {text1}\nSentiment : {label_word}",
        query_pattern="{field_label_1} : {text1}\nSentiment : ",
        variant="manual",
    )
    minimal = InferenceTemplate(
        demo_pattern="{text1}\n{label_word}",
        query_pattern="{text1}\n",
        variant="minimal",
    )
    generation = GenerationTemplate(
        exemplar_pattern="Generate a review : {text1}",
        directive_pattern='Generate a "{label_word}"  review : ',
        class_only_directive='Generate a "{label_word}"  review : ',
    )
    return manual, minimal, generation


def _pair_templates(cue: str) -> tuple[InferenceTemplate, InferenceTemplate, GenerationTemplate]:
    query = "{field_label_1} : {text1}\n{field_label_2} : {text2}\n" + cue
    manual = InferenceTemplate(
        demo_pattern=query + "{label_word}",
        query_pattern=query,
        variant="manual",
    )
    minimal = InferenceTemplate(
        demo_pattern="{text1}\n{text2}\n{label_word}",
        query_pattern="{text1}\n{text2}\n",
        variant="minimal",
    )
    generation = GenerationTemplate(
        exemplar_pattern="{field_label_1} : {text1}\nGenerate a {field_label_2} : {text2}",
        directive_pattern='Generate a "{label_word}"  {field_label_2} : ',
        class_only_directive='Generate a "{label_word}"  {field_label_2} : ',
    )
    return manual, minimal, generation


def _sst2() -> TaskSpec:
    manual, minimal, generation = _sst_templates()
    return TaskSpec(
        name="sst2",
        arity="single-sentence",
        classes=("positive", "negative"),
        verbalizer=("positive", "negative"),
        field_labels=("Review",),
        manual_template=manual,
        minimal_template=minimal,
        generation_template=generation,
    )


def _sst5() -> TaskSpec:
    manual, minimal, generation = _sst_templates()
    return TaskSpec(
        name="sst5",
        arity="single-sentence",
        classes=("terrible", "bad", "okay", "good", "great"),
        verbalizer=("terrible", "bad", "okay", "good", "great"),
        field_labels=("Review",),
        manual_template=manual,
        minimal_template=minimal,
        generation_template=generation,
    )


def _rte() -> TaskSpec:
    manual, minimal, generation = _pair_templates("True or False? ")
    return TaskSpec(
        name="rte",
        arity="sentence-pair",
        classes=("entailment", "not_entailment"),
        verbalizer=("true", "false"),
        field_labels=("Premise", "Hypothesis"),
        manual_template=manual,
        minimal_template=minimal,
        generation_template=generation,
    )


def _cb() -> TaskSpec:
    manual, minimal, generation = _pair_templates("Yes, No, or Neither? ")
    return TaskSpec(
        name="cb",
        arity="sentence-pair",
        classes=("entailment", "contradiction", "neutral"),
        verbalizer=("yes", "no", "neither"),
        field_labels=("Premise", "Hypothesis"),
        manual_template=manual,
        minimal_template=minimal,
        generation_template=generation,
    )


_BUILTINS = {"sst2": _sst2, "sst5": _sst5, "rte": _rte, "cb": _cb}

BUILTIN_TASK_NAMES = tuple(sorted(_BUILTINS))


def builtin_task(name: str) -> TaskSpec:
    """Return the built-in task spec for ``name`` (sst2, sst5, rte, cb)."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise UnknownTaskError(
            f"unknown task {name!r}; built-in tasks: {', '.join(BUILTIN_TASK_NAMES)}"
        ) from None
    return factory()
