"""Self-generated in-context learning toolkit.

Generates per-class demonstrations conditioned on each test input via a
completion backend, assembles in-context prompts, scores verbalizer words to
classify, and evaluates zero-shot / gold few-shot / self-generated methods
with seed-averaged accuracy, shot sweeps, sample-worth, and similarity
analyses.
"""

from .analysis import (
    MethodReport,
    SampleWorth,
    SimilarityReport,
    accuracy,
    build_report,
    cosine,
    sample_worth,
    shot_sweep,
    similarity_analysis,
)
from .backend import (
    Backend,
    RemoteBackend,
    StubBackend,
    StubScript,
    fingerprint,
    truncate_at_stop,
)
from .cache import CacheKey, DemonstrationCache
from .config import load_backend, load_config_file
from .core import (
    BUILTIN_TASK_NAMES,
    Example,
    GeneratedDemonstration,
    Prediction,
    Provenance,
    RunConfig,
    SamplingConfig,
    TaskSpec,
    builtin_task,
)
from .datasets import DatasetFile, label_map_for, load_dataset
from .errors import (
    CacheIntegrityError,
    ConfigurationError,
    DatasetRowError,
    DatasetSchemaError,
    DegenerateGenerationError,
    GenerationFailedError,
    InputError,
    InvalidClassError,
    ScoringError,
    SgiclError,
    TemplateResolutionError,
    TransportError,
    UndefinedSimilarityError,
    UnknownTaskError,
)
from .golden import validate_templates
from .pipeline import (
    DemonstrationSet,
    RunResult,
    assign_classes,
    generation_seed,
    predict,
    predict_with_prompt,
    run_method,
    self_generate,
)
from .taskfile import load_task_file, save_task_file
from .templating import (
    GenerationTemplate,
    InferenceTemplate,
    render_demonstration,
    render_generation_prompt,
    render_inference_prompt,
    render_query,
)

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_TASK_NAMES",
    "Backend",
    "CacheIntegrityError",
    "CacheKey",
    "ConfigurationError",
    "DatasetFile",
    "DatasetRowError",
    "DatasetSchemaError",
    "DegenerateGenerationError",
    "DemonstrationCache",
    "DemonstrationSet",
    "Example",
    "GeneratedDemonstration",
    "GenerationFailedError",
    "GenerationTemplate",
    "InferenceTemplate",
    "InputError",
    "InvalidClassError",
    "MethodReport",
    "Prediction",
    "Provenance",
    "RemoteBackend",
    "RunConfig",
    "RunResult",
    "SampleWorth",
    "SamplingConfig",
    "ScoringError",
    "SgiclError",
    "SimilarityReport",
    "StubBackend",
    "StubScript",
    "TaskSpec",
    "TemplateResolutionError",
    "TransportError",
    "UndefinedSimilarityError",
    "UnknownTaskError",
    "accuracy",
    "assign_classes",
    "build_report",
    "builtin_task",
    "cosine",
    "fingerprint",
    "generation_seed",
    "label_map_for",
    "load_backend",
    "load_config_file",
    "load_dataset",
    "load_task_file",
    "predict",
    "predict_with_prompt",
    "render_demonstration",
    "render_generation_prompt",
    "render_inference_prompt",
    "render_query",
    "run_method",
    "sample_worth",
    "save_task_file",
    "self_generate",
    "shot_sweep",
    "similarity_analysis",
    "truncate_at_stop",
    "validate_templates",
]
