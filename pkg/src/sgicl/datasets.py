"""Dataset ingestion: TSV and JSON-lines files with per-task label maps.

Example ids are the physical file line numbers, zero-padded to six digits, so
an id always points back to the exact line in the source file (for TSV files
the header is line 1 and data ids start at ``000002``). Loading is order-stable
and idempotent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .core import Example, TaskSpec
from .errors import (
    ConfigurationError,
    DatasetRowError,
    DatasetSchemaError,
    InputError,
)

DATASET_FORMATS = ("tsv", "jsonl")
SPLITS = ("train", "validation")

_TEXT1_CANDIDATES = ("text", "sentence", "text1", "sentence1", "premise")
_TEXT2_CANDIDATES = ("text2", "sentence2", "hypothesis")
_LABEL_CANDIDATES = ("label", "gold")

# Gold labels of the built-in tasks, mapped onto class ids (the Appendix-style
# verbalizer order). Keys are matched case-insensitively after stripping.
# SST-2 note: the common numeric encoding is 1=positive, 0=negative, which is
# the reverse of the class-id order.
LABEL_MAPS: dict[str, dict[str, int]] = {
    "sst2": {"positive": 0, "negative": 1, "1": 0, "0": 1},
    "sst5": {
        "terrible": 0, "bad": 1, "okay": 2, "good": 3, "great": 4,
        "0": 0, "1": 1, "2": 2, "3": 3, "4": 4,
    },
    "rte": {
        "entailment": 0, "not_entailment": 1,
        "true": 0, "false": 1, "0": 0, "1": 1,
    },
    "cb": {
        "entailment": 0, "contradiction": 1, "neutral": 2,
        "yes": 0, "no": 1, "neither": 2, "0": 0, "1": 1, "2": 2,
    },
}


def label_map_for(task: TaskSpec) -> dict[str, int]:
    """Label-string-to-class-id map: shipped for built-ins, derived otherwise."""
    if task.name in LABEL_MAPS:
        return dict(LABEL_MAPS[task.name])
    derived: dict[str, int] = {}
    for i, name in enumerate(task.classes):
        derived[name.lower()] = i
        derived[task.verbalizer[i].lower()] = i
        derived[str(i)] = i
    return derived


@dataclass
class DatasetFile:
    """A dataset file plus how its columns/fields map onto Example fields."""

    path: Path
    format: str | None = None  # inferred from the suffix when None
    columns: dict[str, str] = field(default_factory=dict)  # text1/text2/label overrides
    split: str = "validation"

    def __post_init__(self):
        self.path = Path(self.path)
        if self.format is None:
            suffix = self.path.suffix.lower()
            if suffix == ".tsv":
                self.format = "tsv"
            elif suffix in (".jsonl", ".json"):
                self.format = "jsonl"
            else:
                raise ConfigurationError(
                    f"cannot infer dataset format from {self.path.name!r}; "
                    "pass format='tsv' or 'jsonl'"
                )
        if self.format not in DATASET_FORMATS:
            raise ConfigurationError(
                f"unknown dataset format {self.format!r}; expected one of {DATASET_FORMATS}"
            )
        if self.split not in SPLITS:
            raise ConfigurationError(
                f"unknown split {self.split!r}; expected one of {SPLITS}"
            )


def load_dataset(
    task: TaskSpec, datafile: DatasetFile, *, limit: int | None = None
) -> list[Example]:
    """Load examples in file order; ids are zero-padded physical line numbers."""
    if not datafile.path.exists():
        raise ConfigurationError(f"dataset file not found: {datafile.path}")
    if datafile.format == "tsv":
        return _load_tsv(task, datafile, limit)
    return _load_jsonl(task, datafile, limit)


def _resolve_column(
    available: list[str], overrides: dict[str, str], slot: str, candidates: tuple[str, ...]
) -> str | None:
    if slot in overrides:
        name = overrides[slot]
        if name not in available:
            raise DatasetSchemaError(
                f"mapped column {name!r} for {slot} not present in the file"
            )
        return name
    for candidate in candidates:
        if candidate in available:
            return candidate
    return None


def _schema(task: TaskSpec, available: list[str], overrides: dict[str, str]):
    text1 = _resolve_column(available, overrides, "text1", _TEXT1_CANDIDATES)
    if text1 is None:
        raise DatasetSchemaError(
            f"no text column found; expected one of {_TEXT1_CANDIDATES} "
            "or an explicit text1 mapping"
        )
    text2 = None
    if task.arity == "sentence-pair":
        text2 = _resolve_column(available, overrides, "text2", _TEXT2_CANDIDATES)
        if text2 is None:
            raise DatasetSchemaError(
                f"task {task.name!r} is sentence-pair but the file has no "
                f"second text column (expected one of {_TEXT2_CANDIDATES})"
            )
    label = _resolve_column(available, overrides, "label", _LABEL_CANDIDATES)
    return text1, text2, label


def _map_label(task: TaskSpec, label_map: dict[str, int], raw, line: int) -> int:
    key = str(raw).strip().lower()
    if key not in label_map:
        raise DatasetRowError(
            f"line {line}: label {raw!r} is not mappable for task {task.name!r} "
            f"(known labels: {sorted(label_map)})",
            line=line,
        )
    class_id = label_map[key]
    if not 0 <= class_id < task.n_classes:
        raise DatasetRowError(
            f"line {line}: label {raw!r} maps outside the task's class set", line=line
        )
    return class_id


def _make_example(
    task: TaskSpec, line: int, text1: str, text2: str | None, gold: int | None
) -> Example:
    try:
        example = Example(id=f"{line:06d}", text1=text1, text2=text2, gold=gold)
    except InputError as exc:
        raise DatasetRowError(f"line {line}: {exc}", line=line) from None
    if not example.matches_arity(task):
        raise DatasetRowError(
            f"line {line}: example does not match task arity {task.arity!r}", line=line
        )
    return example


def _load_tsv(task: TaskSpec, datafile: DatasetFile, limit: int | None) -> list[Example]:
    lines = datafile.path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DatasetSchemaError(f"{datafile.path}: empty file (missing header row)")
    header = lines[0].split("\t")
    text1_col, text2_col, label_col = _schema(task, header, datafile.columns)
    index = {name: i for i, name in enumerate(header)}
    label_map = label_map_for(task)

    examples: list[Example] = []
    for line_no, raw in enumerate(lines[1:], start=2):
        if limit is not None and len(examples) >= limit:
            break
        if not raw.strip():
            continue
        fields = raw.split("\t")
        if len(fields) != len(header):
            raise DatasetRowError(
                f"line {line_no}: expected {len(header)} tab-separated fields, "
                f"got {len(fields)}",
                line=line_no,
            )
        text1 = fields[index[text1_col]]
        text2 = fields[index[text2_col]] if text2_col else None
        gold = None
        if label_col:
            gold = _map_label(task, label_map, fields[index[label_col]], line_no)
        examples.append(_make_example(task, line_no, text1, text2, gold))
    return examples


def _load_jsonl(task: TaskSpec, datafile: DatasetFile, limit: int | None) -> list[Example]:
    label_map = label_map_for(task)
    examples: list[Example] = []
    schema = None
    for line_no, raw in enumerate(
        datafile.path.read_text(encoding="utf-8").splitlines(), start=1
    ):
        if limit is not None and len(examples) >= limit:
            break
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise DatasetRowError(f"line {line_no}: invalid JSON ({exc})", line=line_no)
        if not isinstance(record, dict):
            raise DatasetRowError(f"line {line_no}: expected a JSON object", line=line_no)
        if schema is None:
            schema = _schema(task, list(record), datafile.columns)
        text1_field, text2_field, label_field = schema
        try:
            text1 = str(record[text1_field])
        except KeyError:
            raise DatasetRowError(
                f"line {line_no}: missing field {text1_field!r}", line=line_no
            ) from None
        text2 = None
        if text2_field:
            if text2_field not in record:
                raise DatasetRowError(
                    f"line {line_no}: missing field {text2_field!r}", line=line_no
                )
            text2 = str(record[text2_field])
        gold = None
        if label_field and label_field in record:
            gold = _map_label(task, label_map, record[label_field], line_no)
        examples.append(_make_example(task, line_no, text1, text2, gold))
    return examples


__all__ = [
    "DATASET_FORMATS",
    "DatasetFile",
    "LABEL_MAPS",
    "label_map_for",
    "load_dataset",
]
