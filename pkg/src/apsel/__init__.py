"""Budget-constrained WiFi access-point selection with annealing samplers.

Pipeline: ingest a fingerprint database, score per-AP importance and pairwise
redundancy, fold both into a quadratic binary model with a cardinality
penalty, sample it with simulated (quantum) annealing, and measure the chosen
subset's 3D localization quality against the full-database baseline.
"""

from ._version import __version__
from .analysis import (
    ImportanceVector,
    Metric,
    RedundancyMatrix,
    importance,
    normalize_scores,
    redundancy,
)
from .anneal import (
    AnnealConfig,
    SampleRow,
    SampleSet,
    Sampler,
    SelectionResult,
    sa_sample,
    select,
    sqa_sample,
    tts,
)
from .dataset import (
    CoordinateTransform,
    DatasetSplit,
    FingerprintDataset,
    IngestConfig,
    concat,
    dump,
    load_csv,
    load_dump,
    load_many,
    normalize_labels,
    split,
)
from .errors import ApselError, ConfigError, DataError, SolverError
from .localize import (
    LocalizationReport,
    LocalizerConfig,
    PositionEstimate,
    error_3d,
    evaluate,
    predict,
)
from .qubo import IsingModel, QuboModel, brute_force, build, energy, to_ising
from .selection import KnnLocalizer, QuboApSelector

__all__ = [
    "__version__",
    "ApselError",
    "ConfigError",
    "DataError",
    "SolverError",
    "IngestConfig",
    "CoordinateTransform",
    "FingerprintDataset",
    "DatasetSplit",
    "load_csv",
    "load_dump",
    "load_many",
    "concat",
    "normalize_labels",
    "split",
    "dump",
    "Metric",
    "ImportanceVector",
    "RedundancyMatrix",
    "importance",
    "redundancy",
    "normalize_scores",
    "QuboModel",
    "IsingModel",
    "build",
    "energy",
    "to_ising",
    "brute_force",
    "AnnealConfig",
    "Sampler",
    "SampleRow",
    "SampleSet",
    "SelectionResult",
    "sa_sample",
    "sqa_sample",
    "tts",
    "select",
    "LocalizerConfig",
    "LocalizationReport",
    "PositionEstimate",
    "predict",
    "error_3d",
    "evaluate",
    "QuboApSelector",
    "KnnLocalizer",
]
