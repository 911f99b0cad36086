"""Wrapper-based channel-subset selection over pluggable accuracy evaluators.

The library splits into: core domain types (model), the bit-exact trial-set
container and synthetic generator (dataio), interchangeable subset evaluators
(evaluators, external, cache), the search strategies (selectors), and the
report/CLI surface (report, cli).
"""

from .cache import EvalCache, EvalCacheKey, cache_dir_from_env
from .dataio import (
    EtsHeader,
    SynthSpec,
    fingerprint,
    import_csv,
    read_ets,
    synth,
    write_ets,
)
from .evaluators import (
    BuiltinEvalConfig,
    BuiltinEvaluator,
    OracleSpec,
    evaluate_builtin,
    evaluate_oracle,
    extract_features,
    stratified_folds,
)
from .external import ExternalEvaluatorSession, ExternalSessionPool
from .lda import ShrinkageLdaModel, fit_shrinkage_lda
from .model import (
    ChannelSubset,
    EvalResult,
    Montage,
    ScoreVector,
    SelectionMethod,
    SelectionTrace,
    SubsetMask,
    TEN_TWENTY_22,
    TraceStep,
    TrialSet,
    canonicalize,
    mask_of,
    restrict,
    subset_of,
)
from .report import (
    CountMode,
    EegnetArch,
    RunReport,
    eegnet_param_count,
    format_kilo,
)
from .selectors import (
    CurvePoint,
    RegionSpec,
    ScoreMode,
    WeightedRandomConfig,
    WeightedRandomResult,
    accuracy_curve,
    exhaustive_search,
    greedy_forward_search,
    rank_channels,
    row_prefix,
    sample_masks,
    score_channels,
    task_based_subset,
    weighted_random_search,
)

__version__ = "0.1.0"
