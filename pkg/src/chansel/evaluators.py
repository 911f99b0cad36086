"""Subset-accuracy evaluators: the built-in cross-validated classifier and the
dataset-free arithmetic oracle used to verify the selectors.

The built-in evaluator is a deterministic function of (dataset bytes, subset,
config, seed): per-channel log band-power features feed a shrinkage LDA under
stratified k-fold cross-validation, and the reported accuracy is pooled
correct/total over all trials.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import ClassTooSmallError
from .lda import fit_shrinkage_lda
from .model import ChannelSubset, EvalResult, TrialSet, restrict

LOG_EPS = 1e-12

DEFAULT_BANDS = ((4.0, 8.0), (8.0, 13.0), (13.0, 30.0))


@dataclass(frozen=True)
class BuiltinEvalConfig:
    """Knobs for the built-in evaluator.

    Band edges are half-open [low, high) in hertz. When the sampling rate is
    too low for the configured bands and broadband_fallback is on, features
    collapse to one log-variance value per channel; with the fallback off the
    same situation is an error.
    """

    n_folds: int = 5
    shrinkage_gamma: float = 0.1
    bands_hz: tuple[tuple[float, float], ...] = DEFAULT_BANDS
    broadband_fallback: bool = True

    def __post_init__(self):
        bands = tuple((float(lo), float(hi)) for lo, hi in self.bands_hz)
        object.__setattr__(self, "bands_hz", bands)
        if self.n_folds < 2:
            raise ValueError("need at least 2 folds")
        if not (0.0 <= self.shrinkage_gamma <= 1.0):
            raise ValueError("shrinkage gamma must lie in [0, 1]")
        if not bands:
            raise ValueError("need at least one frequency band")
        for lo, hi in bands:
            if not (0.0 <= lo < hi):
                raise ValueError(f"band ({lo}, {hi}) must satisfy 0 <= low < high")

    def bands_feasible(self, fs_hz: float) -> bool:
        return all(hi < fs_hz / 2 for _, hi in self.bands_hz)

    def evaluator_id(self) -> str:
        bands = ",".join(f"{lo:g}-{hi:g}" for lo, hi in self.bands_hz)
        return (
            f"builtin:v1:folds={self.n_folds}:gamma={self.shrinkage_gamma:g}"
            f":bands={bands}:fallback={int(self.broadband_fallback)}"
        )


def stratified_folds(labels, n_folds: int, seed: int) -> np.ndarray:
    """Assign each trial a fold id in [0, n_folds); per-class counts differ by <= 1."""
    y = np.asarray(labels)
    rng = np.random.default_rng(seed)
    folds = np.empty(len(y), dtype=np.int64)
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if len(members) < n_folds:
            raise ClassTooSmallError(int(cls), len(members), n_folds)
        order = rng.permutation(len(members))
        folds[members[order]] = np.arange(len(members)) % n_folds
    return folds


def extract_features(trials: TrialSet, cfg: BuiltinEvalConfig) -> np.ndarray:
    """N x (C*B) feature matrix, channel-major blocks of B band features.

    feature(trial, channel, band) = log(eps + sum_{f in band} |X(f)|^2 / T)
    with X the DFT of the channel's samples. Broadband fallback replaces the
    bands with a single log(eps + sample variance) per channel.
    """
    fs = trials.montage.fs_hz
    x = trials.samples.astype(np.float64)
    n, c, t = x.shape
    if not cfg.bands_feasible(fs):
        if not cfg.broadband_fallback:
            raise ValueError(
                f"bands {cfg.bands_hz} need fs > {2 * max(hi for _, hi in cfg.bands_hz):g} Hz, "
                f"got {fs:g} Hz and broadband fallback is off"
            )
        return np.log(LOG_EPS + x.var(axis=2))
    power = np.abs(np.fft.rfft(x, axis=2)) ** 2 / t
    freqs = np.fft.rfftfreq(t, 1.0 / fs)
    per_band = []
    for lo, hi in cfg.bands_hz:
        in_band = (freqs >= lo) & (freqs < hi)
        per_band.append(np.log(LOG_EPS + power[:, :, in_band].sum(axis=2)))
    return np.stack(per_band, axis=2).reshape(n, c * len(cfg.bands_hz))


def _cv_accuracy(features: np.ndarray, labels: np.ndarray, folds: np.ndarray,
                 gamma: float) -> tuple[float, tuple[float, ...]]:
    correct_total = 0
    per_fold = []
    for fold in range(int(folds.max()) + 1):
        test = folds == fold
        train = ~test
        model = fit_shrinkage_lda(features[train], labels[train], gamma)
        predictions = model.predict(features[test])
        correct = int((predictions == labels[test]).sum())
        correct_total += correct
        per_fold.append(correct / int(test.sum()))
    return correct_total / len(labels), tuple(per_fold)


def evaluate_builtin(trials: TrialSet, subset: ChannelSubset, cfg: BuiltinEvalConfig,
                     seed: int) -> EvalResult:
    """Restrict, featurize, cross-validate; pooled correct/total accuracy."""
    start = time.perf_counter()
    subset.validate_for(trials.n_channels)
    features = extract_features(restrict(trials, subset), cfg)
    folds = stratified_folds(trials.labels, cfg.n_folds, seed)
    accuracy, per_fold = _cv_accuracy(features, trials.labels, folds, cfg.shrinkage_gamma)
    return EvalResult(
        subset=subset,
        accuracy=accuracy,
        per_fold_accuracy=per_fold,
        evaluator_id=cfg.evaluator_id(),
        seed=seed,
        wall_time_ms=int((time.perf_counter() - start) * 1000),
    )


class BuiltinEvaluator:
    """evaluate_builtin with the full feature matrix and folds precomputed once.

    Features are per-channel, so slicing columns of the full matrix is
    bit-identical to featurizing the restricted trial set; repeated subset
    evaluations over one dataset skip the FFT entirely.
    """

    def __init__(self, trials: TrialSet, cfg: BuiltinEvalConfig = BuiltinEvalConfig(),
                 seed: int = 0):
        self.trials = trials
        self.cfg = cfg
        self.seed = seed
        self._features = extract_features(trials, cfg)
        self._per_channel = self._features.shape[1] // trials.n_channels
        self._folds = stratified_folds(trials.labels, cfg.n_folds, seed)

    def evaluate(self, subset: ChannelSubset) -> EvalResult:
        start = time.perf_counter()
        subset.validate_for(self.trials.n_channels)
        b = self._per_channel
        cols = [ch * b + j for ch in subset.indices for j in range(b)]
        accuracy, per_fold = _cv_accuracy(
            self._features[:, cols], self.trials.labels, self._folds,
            self.cfg.shrinkage_gamma,
        )
        return EvalResult(
            subset=subset,
            accuracy=accuracy,
            per_fold_accuracy=per_fold,
            evaluator_id=self.cfg.evaluator_id(),
            seed=self.seed,
            wall_time_ms=int((time.perf_counter() - start) * 1000),
        )

    def __call__(self, subset: ChannelSubset) -> EvalResult:
        return self.evaluate(subset)


@dataclass(frozen=True)
class OracleSpec:
    """Closed-form stand-in evaluator: accuracy depends only on membership counts."""

    informative: ChannelSubset
    base: float = 0.5
    gain: float = 0.1
    penalty: float = 0.01

    def __post_init__(self):
        for name in ("base", "gain", "penalty"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite")
        if self.gain < 0 or self.penalty < 0:
            raise ValueError("gain and penalty must be non-negative")

    def evaluator_id(self) -> str:
        inf = "+".join(str(i) for i in self.informative.indices)
        return f"oracle:base={self.base:g}:gain={self.gain:g}:penalty={self.penalty:g}:inf={inf}"


def evaluate_oracle(subset: ChannelSubset, spec: OracleSpec) -> EvalResult:
    """clamp01(base + gain*|subset ∩ informative| - penalty*|subset \\ informative|)."""
    informative = set(spec.informative.indices)
    overlap = sum(1 for i in subset.indices if i in informative)
    extra = subset.size - overlap
    accuracy = min(1.0, max(0.0, spec.base + spec.gain * overlap - spec.penalty * extra))
    return EvalResult(
        subset=subset,
        accuracy=accuracy,
        per_fold_accuracy=None,
        evaluator_id=spec.evaluator_id(),
        seed=0,
        wall_time_ms=0,
    )
