"""Reference external evaluator for the chansel-eval stdio protocol."""

from .classifier import PluginConfig, held_out_accuracy, log_variance_features, stratified_split
from .ets import digest_file, read_ets, serialize
from .serve import serve

__version__ = "0.1.0"
