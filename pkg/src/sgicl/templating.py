"""Byte-exact rendering of generation prompts, demonstration blocks, and
inference prompts.

All rendering is pure: identical inputs produce identical bytes. Patterns use
``str.format`` placeholders drawn from a fixed vocabulary ({text1}, {text2},
{field_label_1}, {field_label_2}, {label_word}); anything else is rejected at
construction so a task definition cannot silently render garbage.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from string import Formatter
from typing import TYPE_CHECKING

from .errors import ConfigurationError, TemplateResolutionError

if TYPE_CHECKING:  # pragma: no cover - annotations only
    from .core import Example, TaskSpec

VARIANTS = ("manual", "minimal")
CONDITIONING_MODES = ("class-only", "input-and-class")

DEMO_SEPARATOR = "\n\n"

_LABEL_SLOT = "{label_word}"
_SINGLE_FIELDS = frozenset({"text1", "field_label_1", "label_word"})
_PAIR_FIELDS = _SINGLE_FIELDS | {"text2", "field_label_2"}


def placeholders(pattern: str) -> frozenset[str]:
    """Replacement-field names appearing in a format pattern."""
    try:
        return frozenset(name for _, name, _, _ in Formatter().parse(pattern) if name)
    except ValueError as exc:
        raise TemplateResolutionError(f"malformed template pattern: {exc}") from None


def render_pattern(pattern: str, mapping: dict[str, str]) -> str:
    missing = placeholders(pattern) - set(mapping)
    if missing:
        raise TemplateResolutionError(
            "unresolved template placeholder(s): " + ", ".join(sorted(missing))
        )
    return pattern.format_map(mapping)


@dataclass(frozen=True)
class InferenceTemplate:
    """Demonstration and query patterns for one inference-template variant.

    ``query_pattern`` is ``demo_pattern`` truncated at the label slot, so a
    rendered demonstration is always the rendered query followed byte-for-byte
    by the label word.
    """

    demo_pattern: str
    query_pattern: str
    variant: str

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigurationError(
                f"unknown template variant {self.variant!r}; expected one of {VARIANTS}"
            )
        if self.demo_pattern != self.query_pattern + _LABEL_SLOT:
            raise ConfigurationError(
                "demo_pattern must be query_pattern immediately followed by "
                "the {label_word} slot"
            )
        if self.variant == "minimal":
            labels = {n for n in placeholders(self.demo_pattern) if n.startswith("field_label")}
            if labels:
                raise ConfigurationError("minimal templates must not use field labels")


@dataclass(frozen=True)
class GenerationTemplate:
    """Patterns for the demonstration-generation prompt.

    ``exemplar_pattern`` renders the test input as a shown exemplar;
    ``directive_pattern`` asks for a new sample of the quoted target class.
    ``class_only_directive`` is used alone when generation conditions on the
    class but not the input.
    """

    exemplar_pattern: str
    directive_pattern: str
    class_only_directive: str

    def __post_init__(self):
        for name in ("directive_pattern", "class_only_directive"):
            pattern = getattr(self, name)
            if pattern.count(_LABEL_SLOT) != 1 or f'"{_LABEL_SLOT}"' not in pattern:
                raise ConfigurationError(
                    f"{name} must contain exactly one label-word slot wrapped "
                    'in double quotes ("{label_word}")'
                )

    def hash(self) -> str:
        """Stable 16-hex-char digest over the pattern bytes (cache keying)."""
        payload = "\x1f".join(
            (self.exemplar_pattern, self.directive_pattern, self.class_only_directive)
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _item_texts(task: TaskSpec, item) -> tuple[str, str | None]:
    # GeneratedDemonstration: the generated text stands in for the field the
    # task generates (the single sentence, or the hypothesis of a pair).
    if hasattr(item, "generated_text"):
        if task.arity == "sentence-pair":
            return item.carried_premise, item.generated_text
        return item.generated_text, None
    return item.text1, item.text2


def _field_mapping(task: TaskSpec, text1: str | None, text2: str | None) -> dict[str, str]:
    if not text1:
        raise TemplateResolutionError("text1 is missing or empty")
    mapping = {"text1": text1, "field_label_1": task.field_labels[0]}
    if task.arity == "sentence-pair":
        if not text2:
            raise TemplateResolutionError(
                f"task {task.name!r} is sentence-pair but text2 is missing"
            )
        mapping["text2"] = text2
        mapping["field_label_2"] = task.field_labels[1]
    return mapping


def render_demonstration(task: TaskSpec, item, label: int, variant: str) -> str:
    """Render one input-label pair as a demonstration block."""
    word = task.verbalizer_word(label)
    template = task.inference_template(variant)
    text1, text2 = _item_texts(task, item)
    mapping = _field_mapping(task, text1, text2)
    mapping["label_word"] = word
    return render_pattern(template.demo_pattern, mapping)


def render_query(task: TaskSpec, test: Example, variant: str) -> str:
    """Render the test input as the prompt-final query block.

    The block ends immediately before the label position, so the scored
    continuation starts at the label word.
    """
    template = task.inference_template(variant)
    mapping = _field_mapping(task, test.text1, test.text2)
    return render_pattern(template.query_pattern, mapping)


def render_inference_prompt(
    task: TaskSpec,
    demos,
    test: Example,
    variant: str,
    separator: str = DEMO_SEPARATOR,
) -> str:
    """Assemble the full inference prompt: demonstrations, then the query.

    ``demos`` is an ordered iterable of (item, label) pairs; an empty iterable
    yields the zero-shot prompt (the query block alone).
    """
    blocks = [render_demonstration(task, item, label, variant) for item, label in demos]
    blocks.append(render_query(task, test, variant))
    return separator.join(blocks)


def render_generation_prompt(task: TaskSpec, example, target: int, mode: str) -> str:
    """Render the prompt that asks the model to generate a demonstration of
    class ``target``, optionally conditioned on the test input."""
    if mode not in CONDITIONING_MODES:
        raise ConfigurationError(
            f"unknown conditioning mode {mode!r}; expected one of {CONDITIONING_MODES}"
        )
    word = task.verbalizer_word(target)
    gen = task.generation_template
    labels = {"field_label_1": task.field_labels[0], "label_word": word}
    if task.arity == "sentence-pair":
        labels["field_label_2"] = task.field_labels[1]
    if mode == "class-only":
        return render_pattern(gen.class_only_directive, labels)
    mapping = _field_mapping(task, example.text1, example.text2)
    mapping.update(labels)
    exemplar = render_pattern(gen.exemplar_pattern, mapping)
    directive = render_pattern(gen.directive_pattern, mapping)
    return exemplar + "\n" + directive


def allowed_placeholders(arity: str) -> frozenset[str]:
    """Placeholder vocabulary available to templates of a task arity."""
    return _PAIR_FIELDS if arity == "sentence-pair" else _SINGLE_FIELDS


__all__ = [
    "CONDITIONING_MODES",
    "DEMO_SEPARATOR",
    "GenerationTemplate",
    "InferenceTemplate",
    "VARIANTS",
    "allowed_placeholders",
    "placeholders",
    "render_demonstration",
    "render_generation_prompt",
    "render_inference_prompt",
    "render_pattern",
    "render_query",
]
