"""Plain-text task definition files.

Lets users define new tasks without code changes. The format is line-based
``key = value`` (one space each side of ``=``); values are taken verbatim to
the end of the line with ``\\n`` escaping newlines and ``\\\\`` a backslash,
so trailing spaces in template patterns survive a round-trip. ``#`` lines and
blank lines are ignored.

Keys::

    name, arity, classes, verbalizers, field_labels        (lists: comma+space)
    inference.manual.demo,  inference.manual.query
    inference.minimal.demo, inference.minimal.query
    generation.exemplar, generation.directive, generation.class_only
"""

from __future__ import annotations

from pathlib import Path

from .core import TaskSpec
from .errors import ConfigurationError
from .templating import GenerationTemplate, InferenceTemplate

_REQUIRED_KEYS = (
    "name",
    "arity",
    "classes",
    "verbalizers",
    "field_labels",
    "inference.manual.demo",
    "inference.manual.query",
    "inference.minimal.demo",
    "inference.minimal.query",
    "generation.exemplar",
    "generation.directive",
    "generation.class_only",
)


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace("\n", "\\n")


def _unescape(value: str, line_no: int, path) -> str:
    out = []
    i = 0
    while i < len(value):
        ch = value[i]
        if ch == "\\":
            if i + 1 >= len(value):
                raise ConfigurationError(f"{path}: line {line_no}: dangling backslash")
            nxt = value[i + 1]
            if nxt == "n":
                out.append("\n")
            elif nxt == "\\":
                out.append("\\")
            else:
                raise ConfigurationError(
                    f"{path}: line {line_no}: unknown escape '\\{nxt}'"
                )
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def parse_kv_lines(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; values keep trailing whitespace verbatim."""
    entries: dict[str, str] = {}
    for line_no, raw in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        key, sep, value = raw.partition(" = ")
        if not sep or not key.strip():
            raise ConfigurationError(
                f"{path}: line {line_no}: expected 'key = value'"
            )
        key = key.strip()
        if key in entries:
            raise ConfigurationError(f"{path}: line {line_no}: duplicate key {key!r}")
        entries[key] = _unescape(value, line_no, path)
    return entries


def save_task_file(task: TaskSpec, path: str | Path) -> None:
    manual, minimal = task.manual_template, task.minimal_template
    gen = task.generation_template
    lines = [
        "# sgicl task definition",
        f"name = {task.name}",
        f"arity = {task.arity}",
        f"classes = {', '.join(task.classes)}",
        f"verbalizers = {', '.join(task.verbalizer)}",
        f"field_labels = {', '.join(task.field_labels)}",
        f"inference.manual.demo = {_escape(manual.demo_pattern)}",
        f"inference.manual.query = {_escape(manual.query_pattern)}",
        f"inference.minimal.demo = {_escape(minimal.demo_pattern)}",
        f"inference.minimal.query = {_escape(minimal.query_pattern)}",
        f"generation.exemplar = {_escape(gen.exemplar_pattern)}",
        f"generation.directive = {_escape(gen.directive_pattern)}",
        f"generation.class_only = {_escape(gen.class_only_directive)}",
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_task_file(path: str | Path) -> TaskSpec:
    entries = parse_kv_lines(path)
    missing = [key for key in _REQUIRED_KEYS if key not in entries]
    if missing:
        raise ConfigurationError(f"{path}: missing key(s): {', '.join(missing)}")
    manual = InferenceTemplate(
        demo_pattern=entries["inference.manual.demo"],
        query_pattern=entries["inference.manual.query"],
        variant="manual",
    )
    minimal = InferenceTemplate(
        demo_pattern=entries["inference.minimal.demo"],
        query_pattern=entries["inference.minimal.query"],
        variant="minimal",
    )
    generation = GenerationTemplate(
        exemplar_pattern=entries["generation.exemplar"],
        directive_pattern=entries["generation.directive"],
        class_only_directive=entries["generation.class_only"],
    )
    return TaskSpec(
        name=entries["name"],
        arity=entries["arity"],
        classes=tuple(entries["classes"].split(", ")),
        verbalizer=tuple(entries["verbalizers"].split(", ")),
        field_labels=tuple(entries["field_labels"].split(", ")),
        manual_template=manual,
        minimal_template=minimal,
        generation_template=generation,
    )


__all__ = ["load_task_file", "parse_kv_lines", "save_task_file"]
