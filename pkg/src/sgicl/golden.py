"""Byte-exact validation of template rendering against golden fixtures.

The fixture files under ``sgicl/golden/`` were transcribed by hand from the
published template tables and are never regenerated by this code; rendering
must reproduce them byte for byte. Each built-in task has six cases:
manual/minimal demonstration and query blocks, the input-and-class generation
prompt, and the class-only generation prompt.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .core import Example, TaskSpec, builtin_task
from .templating import (
    render_demonstration,
    render_generation_prompt,
    render_query,
)


@dataclass(frozen=True)
class CanonicalInput:
    """The worked example each task's template table shows."""

    text1: str
    text2: str | None
    shown_label: str  # class name used in the inference rows
    generation_target: str  # class name quoted in the generation rows


CANONICAL_INPUTS: dict[str, CanonicalInput] = {
    "sst2": CanonicalInput(
        text1="a fast , funny , highly enjoyable movie .",
        text2=None,
        shown_label="positive",
        generation_target="negative",
    ),
    "sst5": CanonicalInput(
        text1="it 's worth taking the kids to .",
        text2=None,
        shown_label="great",
        generation_target="bad",
    ),
    "rte": CanonicalInput(
        text1=(
            "Dana Reeve, the widow of the actor Christopher Reeve, has died "
            "of lung cancer at age 44, according to the Christopher Reeve "
            "Foundation."
        ),
        text2="Christopher Reeve had an accident.",
        shown_label="not_entailment",
        generation_target="entailment",
    ),
    "cb": CanonicalInput(
        text1=(
            "It was a complex language. Not written down but handed down. "
            "One might say it was peeled down."
        ),
        text2="the language was peeled down",
        shown_label="entailment",
        generation_target="neutral",
    ),
}

CASES = (
    "manual_demo",
    "manual_query",
    "minimal_demo",
    "minimal_query",
    "generation",
    "generation_class_only",
)


def _render_case(task: TaskSpec, canon: CanonicalInput, case: str) -> str:
    example = Example(id="golden", text1=canon.text1, text2=canon.text2)
    label = task.class_index(canon.shown_label)
    target = task.class_index(canon.generation_target)
    if case == "manual_demo":
        return render_demonstration(task, example, label, "manual")
    if case == "manual_query":
        return render_query(task, example, "manual")
    if case == "minimal_demo":
        return render_demonstration(task, example, label, "minimal")
    if case == "minimal_query":
        return render_query(task, example, "minimal")
    if case == "generation":
        return render_generation_prompt(task, example, target, "input-and-class")
    if case == "generation_class_only":
        return render_generation_prompt(task, example, target, "class-only")
    raise ValueError(f"unknown golden case {case!r}")


@dataclass(frozen=True)
class TemplateCheck:
    name: str
    ok: bool
    expected: bytes
    actual: bytes


def _fixture_bytes(name: str, fixture_dir: Path | None) -> bytes:
    if fixture_dir is not None:
        return (fixture_dir / f"{name}.txt").read_bytes()
    return resources.files("sgicl").joinpath("golden", f"{name}.txt").read_bytes()


def validate_templates(fixture_dir: Path | None = None) -> list[TemplateCheck]:
    """Render every task x case and byte-compare against its fixture."""
    checks = []
    for task_name, canon in CANONICAL_INPUTS.items():
        task = builtin_task(task_name)
        for case in CASES:
            name = f"{task_name}_{case}"
            expected = _fixture_bytes(name, fixture_dir)
            actual = _render_case(task, canon, case).encode("utf-8")
            checks.append(
                TemplateCheck(name=name, ok=actual == expected, expected=expected, actual=actual)
            )
    return checks


__all__ = ["CANONICAL_INPUTS", "CASES", "TemplateCheck", "validate_templates"]
