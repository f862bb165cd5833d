"""Command-line surface: generate, eval, sweep, similarity, validate-templates.

Option precedence is defaults < config file (``--config``) < flags. Report
paths write JSON plus delimited (CSV) output and render a PNG figure alongside
them; audit records are JSON-lines, one record per (seed, example). Errors
print a single machine-parsable ``<error-class>: <message>`` line on stderr;
configuration errors exit 2, pipeline errors exit 1.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .analysis import (
    MethodReport,
    build_report,
    sample_worth,
    shot_sweep,
    similarity_analysis,
)
from .backend import StubBackend
from .cache import DemonstrationCache
from .config import load_backend, load_config_file
from .core import (
    Example,
    GeneratedDemonstration,
    RunConfig,
    SamplingConfig,
    TaskSpec,
    builtin_task,
)
from .datasets import DatasetFile, load_dataset
from .errors import ConfigurationError, SgiclError
from .golden import validate_templates
from .pipeline import RunResult, run_method, self_generate
from .plotting import save_eval_figure, save_similarity_figure, save_sweep_figure
from .taskfile import load_task_file

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Option plumbing
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser, *, dataset: bool = True) -> None:
    parser.add_argument("--config", help="flat key-value config file; flags override")
    parser.add_argument("--task", help="built-in task name (sst2, sst5, rte, cb) or a task file path")
    parser.add_argument("--backend", help="backend descriptor (TOML)")
    parser.add_argument("--seeds", help="comma-separated integer seeds (default 0,1,2,3,4)")
    parser.add_argument("--variant", choices=["manual", "minimal"], default=None)
    parser.add_argument(
        "--conditioning",
        default=None,
        help="generation conditioning mode: class-only or input-and-class",
    )
    parser.add_argument("--temperature", type=float, default=None)
    parser.add_argument("--max-new-tokens", type=int, default=None)
    parser.add_argument("--stop", action="append", default=None,
                        help="stop sequence (repeatable; \\n escapes allowed)")
    parser.add_argument("--retry-limit", type=int, default=None)
    parser.add_argument("--no-shuffle-demos", action="store_true",
                        help="keep demonstrations in generation order")
    parser.add_argument("--cache-dir", help="generation cache directory")
    parser.add_argument("--out-dir", help="report output directory (default out)")
    if dataset:
        parser.add_argument("--dataset", help="dataset file (.tsv or .jsonl)")
        parser.add_argument("--limit", type=int, default=None,
                            help="only read the first N examples")
        parser.add_argument("--columns", default=None,
                            help="column overrides, e.g. text1=sentence,label=label")


def _cfg(args) -> dict[str, str]:
    if getattr(args, "config", None):
        return load_config_file(args.config)
    return {}


def _pick(args_value, cfg: dict[str, str], key: str, default=None):
    if args_value is not None:
        return args_value
    if key in cfg:
        return cfg[key]
    return default


def _as_int(value, name: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name} must be an integer, got {value!r}") from None


def _as_float(value, name: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name} must be a number, got {value!r}") from None


def _as_bool(value, name: str) -> bool:
    if isinstance(value, bool):
        return value
    if str(value).lower() in ("true", "1", "yes"):
        return True
    if str(value).lower() in ("false", "0", "no"):
        return False
    raise ConfigurationError(f"{name} must be true or false, got {value!r}")


def _parse_seeds(value) -> tuple[int, ...]:
    if isinstance(value, tuple):
        return value
    try:
        return tuple(int(part) for part in str(value).split(","))
    except ValueError:
        raise ConfigurationError(f"seeds must be comma-separated integers, got {value!r}") from None


def _parse_k_list(value: str) -> list[int]:
    value = value.strip()
    try:
        if ".." in value:
            lo, hi = value.split("..", 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(part) for part in value.split(",")]
    except ValueError:
        raise ConfigurationError(
            f"--k must be a range like 1..8 or a comma list, got {value!r}"
        ) from None


def _unescape_stop(value: str) -> str:
    return value.replace("\\n", "\n").replace("\\t", "\t")


def _parse_columns(value: str | None) -> dict[str, str]:
    if not value:
        return {}
    columns = {}
    for part in value.split(","):
        slot, sep, name = part.partition("=")
        if not sep or slot not in ("text1", "text2", "label"):
            raise ConfigurationError(
                f"--columns entries must look like text1=NAME, got {part!r}"
            )
        columns[slot] = name
    return columns


def _load_task(args, cfg) -> TaskSpec:
    value = _pick(getattr(args, "task", None), cfg, "task")
    if not value:
        raise ConfigurationError("a task is required (--task or config key 'task')")
    path = Path(value)
    if path.is_file():
        return load_task_file(path)
    return builtin_task(value)


def _load_backend(args, cfg):
    value = _pick(getattr(args, "backend", None), cfg, "backend")
    if not value:
        raise ConfigurationError("a backend is required (--backend or config key 'backend')")
    return load_backend(value)


def _load_examples(task: TaskSpec, args, cfg):
    value = _pick(getattr(args, "dataset", None), cfg, "dataset")
    if not value:
        raise ConfigurationError(
            "a dataset file is required (--dataset or config key 'dataset')"
        )
    columns = _parse_columns(getattr(args, "columns", None))
    datafile = DatasetFile(path=Path(value), columns=columns, split="validation")
    limit = _pick(getattr(args, "limit", None), cfg, "limit")
    limit = _as_int(limit, "limit") if limit is not None else None
    return load_dataset(task, datafile, limit=limit)


def _build_run_config(args, cfg, method: str, k: int) -> RunConfig:
    stops = getattr(args, "stop", None)
    if stops is None and "stop" in cfg:
        stops = [cfg["stop"]]
    stop_sequences = tuple(_unescape_stop(s) for s in stops) if stops else ("\n",)
    sampling = SamplingConfig(
        temperature=_as_float(_pick(args.temperature, cfg, "temperature", 0.5), "temperature"),
        max_new_tokens=_as_int(
            _pick(args.max_new_tokens, cfg, "max_new_tokens", 64), "max_new_tokens"
        ),
        stop_sequences=stop_sequences,
        retry_limit=_as_int(_pick(args.retry_limit, cfg, "retry_limit", 3), "retry_limit"),
    )
    shuffle = not args.no_shuffle_demos
    if "shuffle_demos" in cfg and not args.no_shuffle_demos:
        shuffle = _as_bool(cfg["shuffle_demos"], "shuffle_demos")
    return RunConfig(
        method=method,
        k=k,
        seeds=_parse_seeds(_pick(args.seeds, cfg, "seeds", (0, 1, 2, 3, 4))),
        variant=_pick(args.variant, cfg, "variant", "manual"),
        conditioning_mode=_pick(args.conditioning, cfg, "conditioning_mode", "input-and-class"),
        sampling=sampling,
        shuffle_demos=shuffle,
    )


def _cache(args, cfg) -> DemonstrationCache | None:
    value = _pick(getattr(args, "cache_dir", None), cfg, "cache_dir")
    return DemonstrationCache(value) if value else None


def _out_dir(args, cfg) -> Path:
    out = Path(_pick(getattr(args, "out_dir", None), cfg, "out_dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _train_pool_accessor(task: TaskSpec, args, cfg):
    value = _pick(getattr(args, "train", None), cfg, "train")
    if not value:
        return None
    columns = _parse_columns(getattr(args, "columns", None))

    def load() -> list[Example]:
        datafile = DatasetFile(path=Path(value), columns=columns, split="train")
        return load_dataset(task, datafile)

    return load


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _write_json(path: Path, payload) -> Path:
    path.write_text(
        json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    return path


def _write_jsonl(path: Path, records) -> Path:
    lines = [json.dumps(record, sort_keys=True, ensure_ascii=False) for record in records]
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return path


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _print_table(headers, rows) -> None:
    cells = [[str(c) for c in row] for row in rows]
    widths = [
        max(len(headers[i]), *(len(row[i]) for row in cells)) if cells else len(headers[i])
        for i in range(len(headers))
    ]
    print("  ".join(h.ljust(w) for h, w in zip(headers, widths)))
    for row in cells:
        print("  ".join(c.ljust(w) for c, w in zip(row, widths)))


def _report_rows(report: MethodReport):
    return [
        report.task,
        report.method,
        report.variant,
        report.k,
        f"{report.mean:.4f}",
        f"{report.std:.4f}",
        f"{report.min_accuracy:.4f}",
        f"{report.max_accuracy:.4f}",
    ]


_REPORT_HEADERS = ("task", "method", "variant", "k", "mean", "std", "min", "max")


def _audit_record(task: TaskSpec, config: RunConfig, result: RunResult, gold) -> dict:
    demos = []
    if result.demos is not None:
        for item, label in result.demos.demos:
            if isinstance(item, GeneratedDemonstration):
                demos.append(
                    {
                        "kind": "generated",
                        "target_class": label,
                        "label_word": task.verbalizer[label],
                        "text": item.generated_text,
                        "carried_premise": item.carried_premise,
                        "source_example_id": item.source_example_id,
                        "generation_seed": item.provenance.seed,
                        "backend_id": item.provenance.backend_id,
                        "template_hash": item.provenance.template_hash,
                    }
                )
            else:
                demos.append(
                    {
                        "kind": "gold",
                        "target_class": label,
                        "label_word": task.verbalizer[label],
                        "example_id": item.id,
                        "text1": item.text1,
                        "text2": item.text2,
                    }
                )
    return {
        "task": task.name,
        "method": config.method,
        "variant": config.variant,
        "conditioning_mode": config.conditioning_mode if config.method == "sg-icl" else None,
        "k": config.k,
        "seed": result.seed,
        "example_id": result.example_id,
        "gold": gold,
        "prompt_fingerprint": result.prompt_fingerprint,
        "scores": result.prediction.score_map(task),
        "predicted": result.prediction.predicted,
        "predicted_word": task.verbalizer[result.prediction.predicted],
        "demos": demos,
    }


def _golds(dataset) -> dict[str, int]:
    return {ex.id: ex.gold for ex in dataset if ex.gold is not None}


def _print_backend_calls(backend) -> None:
    if isinstance(backend, StubBackend):
        print(
            f"backend calls: complete={backend.complete_calls} "
            f"score={backend.score_calls} embed={backend.embed_calls}"
        )


def _stem(task: TaskSpec, config: RunConfig) -> str:
    stem = f"{task.name}_{config.method}_{config.variant}_k{config.k}"
    if config.method == "sg-icl":
        stem += f"_{config.conditioning_mode}"
    return stem


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_eval(args) -> int:
    cfg = _cfg(args)
    task = _load_task(args, cfg)
    backend = _load_backend(args, cfg)
    method = _pick(args.method, cfg, "method")
    if not method:
        raise ConfigurationError("a method is required (--method or config key 'method')")
    k_raw = _pick(args.k, cfg, "k")
    k = _as_int(k_raw, "k") if k_raw is not None else (0 if method == "zero-shot" else 8)
    config = _build_run_config(args, cfg, method, k)
    dataset = _load_examples(task, args, cfg)
    cache = _cache(args, cfg)
    train_pool = _train_pool_accessor(task, args, cfg)

    results = run_method(
        task, dataset, config, backend, cache=cache, train_pool=train_pool
    )
    golds = _golds(dataset)
    report = build_report(task, config, results, golds)

    out = _out_dir(args, cfg)
    stem = _stem(task, config)
    report_path = _write_json(out / f"eval_{stem}.json", report.to_dict())
    csv_path = _write_csv(
        out / f"eval_{stem}.csv",
        ("task", "method", "variant", "k", "seed", "accuracy"),
        [
            (report.task, report.method, report.variant, report.k, seed, repr(acc))
            for seed, acc in zip(report.seeds, report.per_seed_accuracy)
        ],
    )
    audit_path = _write_jsonl(
        out / f"audit_{stem}.jsonl",
        (_audit_record(task, config, r, golds.get(r.example_id)) for r in results),
    )
    figure_path = save_eval_figure(report, out / f"eval_{stem}.png")

    _print_table(_REPORT_HEADERS, [_report_rows(report)])
    per_seed = " ".join(
        f"{seed}={acc:.4f}" for seed, acc in zip(report.seeds, report.per_seed_accuracy)
    )
    print(f"per-seed: {per_seed}")
    for path in (report_path, csv_path, audit_path, figure_path):
        print(f"wrote {path}")
    _print_backend_calls(backend)
    return 0


def cmd_generate(args) -> int:
    cfg = _cfg(args)
    task = _load_task(args, cfg)
    backend = _load_backend(args, cfg)
    cache = _cache(args, cfg)
    if cache is None:
        raise ConfigurationError(
            "generate needs a cache directory (--cache-dir or config key 'cache_dir')"
        )
    k_raw = _pick(args.k, cfg, "k")
    k = _as_int(k_raw, "k") if k_raw is not None else 8
    config = _build_run_config(args, cfg, "sg-icl", k)
    dataset = _load_examples(task, args, cfg)

    produced = 0
    for seed in config.seeds:
        for example in dataset:
            demo_set = self_generate(task, example, config, backend, seed, cache)
            produced += len(demo_set.demos)
    print(
        f"cached demonstrations for {len(dataset)} example(s) x "
        f"{len(config.seeds)} seed(s): {produced} entries in {cache.root}"
    )
    _print_backend_calls(backend)
    return 0


def cmd_sweep(args) -> int:
    cfg = _cfg(args)
    task = _load_task(args, cfg)
    backend = _load_backend(args, cfg)
    k_raw = _pick(args.k, cfg, "k")
    k_values = _parse_k_list(str(k_raw)) if k_raw is not None else list(range(1, 9))
    k_sgicl = args.k_sgicl if args.k_sgicl is not None else 8
    config = _build_run_config(args, cfg, "sg-icl", k_sgicl)
    dataset = _load_examples(task, args, cfg)
    cache = _cache(args, cfg)
    train_pool = _train_pool_accessor(task, args, cfg)
    if train_pool is None:
        raise ConfigurationError("sweep needs a gold training pool (--train)")
    golds = _golds(dataset)

    audit_records = []

    def record(run_config: RunConfig, results) -> None:
        for result in results:
            audit_records.append(
                _audit_record(task, run_config, result, golds.get(result.example_id))
            )

    reports = shot_sweep(
        task,
        dataset,
        k_values,
        config,
        backend,
        train_pool=train_pool,
        cache=cache,
        record=record,
    )
    few_shot = [r for r in reports if r.method == "few-shot"]
    sg_icl = next(r for r in reports if r.method == "sg-icl")
    worth = sample_worth({r.k: r.mean for r in few_shot}, sg_icl.mean, sg_icl.k)

    out = _out_dir(args, cfg)
    stem = f"{task.name}_{config.variant}"
    payload = {
        "task": task.name,
        "variant": config.variant,
        "k_values": k_values,
        "reports": [r.to_dict() for r in reports],
        "sample_worth": {**worth.to_dict(), "k_sgicl": sg_icl.k},
    }
    json_path = _write_json(out / f"sweep_{stem}.json", payload)
    csv_rows = [
        (r.method, r.k, seed, repr(acc))
        for r in reports
        for seed, acc in zip(r.seeds, r.per_seed_accuracy)
    ]
    csv_path = _write_csv(
        out / f"sweep_{stem}.csv", ("method", "k", "seed", "accuracy"), csv_rows
    )
    audit_path = _write_jsonl(out / f"audit_sweep_{stem}.jsonl", audit_records)
    figure_path = save_sweep_figure(few_shot, sg_icl, worth, out / f"sweep_{stem}.png")

    _print_table(_REPORT_HEADERS, [_report_rows(r) for r in reports])
    print(
        f"sample worth: sg-icl k={sg_icl.k} matches ~{worth.gold_equivalent:.4g} gold "
        f"sample(s); worth={worth.worth:.4f}"
        + (" (clamped)" if worth.clamped else "")
    )
    for path in (json_path, csv_path, audit_path, figure_path):
        print(f"wrote {path}")
    _print_backend_calls(backend)
    return 0


def cmd_similarity(args) -> int:
    cfg = _cfg(args)
    task = _load_task(args, cfg)
    backend = _load_backend(args, cfg)
    embed_value = _pick(args.embed_backend, cfg, "embed_backend")
    embed_backend = load_backend(embed_value) if embed_value else None
    k_raw = _pick(args.k, cfg, "k")
    k = _as_int(k_raw, "k") if k_raw is not None else 8
    mode_arg = _pick(args.conditioning, cfg, "conditioning_mode", "both")
    modes = ["class-only", "input-and-class"] if mode_arg == "both" else [mode_arg]
    if mode_arg == "both":
        # the run config's own mode is replaced per analysis run
        args.conditioning = None
        cfg = {key: value for key, value in cfg.items() if key != "conditioning_mode"}
    config = _build_run_config(args, cfg, "sg-icl", k)
    dataset = _load_examples(task, args, cfg)
    cache = _cache(args, cfg)
    reports = [
        similarity_analysis(
            task, dataset, mode, config, backend, embed_backend=embed_backend, cache=cache
        )
        for mode in modes
    ]

    out = _out_dir(args, cfg)
    stem = f"{task.name}_k{config.k}"
    json_path = _write_json(
        out / f"similarity_{stem}.json",
        {"task": task.name, "k": config.k, "reports": [r.to_dict() for r in reports]},
    )
    csv_path = _write_csv(
        out / f"similarity_{stem}.csv",
        ("conditioning_mode", "pair_index", "similarity"),
        [
            (r.conditioning_mode, i, repr(s))
            for r in reports
            for i, s in enumerate(r.per_pair)
        ],
    )
    figure_path = save_similarity_figure(reports, out / f"similarity_{stem}.png")

    _print_table(
        ("task", "conditioning_mode", "mean_cosine", "n_pairs"),
        [(r.task, r.conditioning_mode, f"{r.mean:.4f}", len(r.per_pair)) for r in reports],
    )
    for path in (json_path, csv_path, figure_path):
        print(f"wrote {path}")
    _print_backend_calls(backend)
    return 0


def cmd_validate_templates(args) -> int:
    fixture_dir = Path(args.fixtures) if args.fixtures else None
    checks = validate_templates(fixture_dir)
    failed = 0
    for check in checks:
        if check.ok:
            print(f"ok   {check.name}")
        else:
            failed += 1
            print(f"DIFF {check.name}")
            print(f"     expected: {check.expected!r}")
            print(f"     actual:   {check.actual!r}")
    print(f"{len(checks) - failed}/{len(checks)} template renderings match")
    return 0 if failed == 0 else 1


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgicl",
        description="Self-generated in-context learning: generation, evaluation, analysis.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log INFO messages")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate one method and write a report")
    _add_common(p_eval)
    p_eval.add_argument("--method", choices=["zero-shot", "few-shot", "sg-icl"], default=None)
    p_eval.add_argument("--k", type=int, default=None, help="demonstration count")
    p_eval.add_argument("--train", help="gold training pool (few-shot only)")
    p_eval.set_defaults(func=cmd_eval)

    p_gen = sub.add_parser("generate", help="fill the generation cache for a dataset slice")
    _add_common(p_gen)
    p_gen.add_argument("--k", type=int, default=None, help="demonstrations per example")
    p_gen.set_defaults(func=cmd_generate)

    p_sweep = sub.add_parser("sweep", help="few-shot sweep over k plus the SG-ICL report")
    _add_common(p_sweep)
    p_sweep.add_argument("--k", default=None, help="few-shot k values: 1..8 or 1,2,4")
    p_sweep.add_argument("--k-sgicl", type=int, default=None, help="SG-ICL k (default 8)")
    p_sweep.add_argument("--train", help="gold training pool file")
    p_sweep.set_defaults(func=cmd_sweep)

    p_sim = sub.add_parser("similarity", help="input vs generated-demo cosine similarity")
    _add_common(p_sim)
    p_sim.add_argument("--k", type=int, default=None, help="demonstrations per example")
    p_sim.add_argument("--embed-backend", help="separate embedding backend descriptor")
    p_sim.set_defaults(func=cmd_similarity)

    p_validate = sub.add_parser(
        "validate-templates", help="byte-compare rendered templates to golden fixtures"
    )
    p_validate.add_argument("--fixtures", help="override the fixture directory (testing)")
    p_validate.set_defaults(func=cmd_validate_templates)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except SgiclError as err:
        print(f"{err.code}: {err}", file=sys.stderr)
        return 2 if isinstance(err, ConfigurationError) else 1


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
