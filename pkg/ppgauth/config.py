"""
Configuration
─────────────
Two layers, as in any deployment of the pipeline:
  - Settings        process-level knobs read from the environment / .env (PPG_*)
  - PipelineConfig  every stage parameter of a run, loaded from one JSON file
"""
from __future__ import annotations

import json
from functools import lru_cache
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from ppgauth.errors import InvalidInput, ParseError
from ppgauth.utils.codec import read_text


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", extra="ignore", env_ignore_empty=True)

    # ── Reproducibility ──────────────────────────────────────────────────────
    PPG_SEED: int | None = None

    # ── Logging ──────────────────────────────────────────────────────────────
    PPG_LOG_LEVEL: str = "INFO"
    PPG_LOG_JSON: bool = False

    # ── Workers ──────────────────────────────────────────────────────────────
    PPG_MAX_WORKERS: int = 4

    # ── Optional dataset-dependent suite ─────────────────────────────────────
    PPG_DATASET_DIR: str | None = None


@lru_cache
def get_settings() -> Settings:
    return Settings()


settings = get_settings()


# ─── Stage sections ───────────────────────────────────────────────────────────

class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ValidationConfig(_Section):
    red_floor: float = Field(30.0, description="capture: minimum mean red level over any 1 s window (0-255 scale)")
    jump_frac: float = Field(0.5, gt=0, description="capture: max sample-to-sample step as a fraction of the trace range")
    min_seconds: float = Field(5.0, ge=0, description="capture: minimum trace duration in seconds")
    # 1.3 g; there is no IMU channel in trace files, so this is informational only
    accel_limit_ms2: float = Field(12.75, description="capture: app-side motion cutoff in m/s^2 (not enforced)")


class DetrendConfig(_Section):
    window_seconds: float = Field(1.0, gt=0, description="preprocess: rolling-average window in seconds")
    alignment: Literal["centered", "trailing"] = Field("centered", description="preprocess: rolling-average alignment")


class FilterSpec(_Section):
    cutoff_hz: float = Field(4.0, gt=0, description="preprocess: low-pass cutoff in Hz (240 bpm)")
    order: int = Field(4, ge=1, description="preprocess: Butterworth order")
    kind: Literal["butterworth_iir"] = Field("butterworth_iir", description="preprocess: filter family")


class PreprocessConfig(_Section):
    detrend: DetrendConfig = DetrendConfig()
    lowpass: FilterSpec = FilterSpec()


class BeatConfig(_Section):
    max_bpm: float = Field(240.0, gt=0, description="beats: fastest admissible heart rate, sets the minimum gap g")
    smoothing_seconds: float = Field(0.25, gt=0, description="beats: moving-average window ws in seconds")
    skip_warmup: bool = Field(True, description="beats: drop beats starting inside the filter warm-up region")


class FtaThresholds(_Section):
    max_bpm: float = Field(120.0, gt=0, description="quality: beats faster than this are FTA")
    max_peaks: int = Field(3, ge=1, description="quality: beats with more distinct maxima are FTA")
    dtw_threshold: float = Field(2.0, gt=0, description="quality: max DTW distance to the reference wave")
    dtw_mode: Literal["total", "path_length"] = Field("total", description="quality: DTW value compared to the threshold")
    smoothing_window: int = Field(5, ge=1, description="quality: smoothing before counting maxima")
    prominence_frac: float = Field(0.02, ge=0, description="quality: peak prominence floor as a fraction of beat range")
    template_length: int = Field(100, ge=8, description="quality: resampled length of beats and reference")


class FeatureConfig(_Section):
    resample_hz: float = Field(1000.0, gt=0, description="features: resampling rate of normalized beats")
    dft_length: int = Field(1000, ge=2, description="features: DFT input length (zero-pad or truncate)")
    ratio_numerator: Literal["b1", "b2"] = Field("b1", description="features: numerator of the b/a2 ratio")


class SelectionConfig(_Section):
    fft_max_components: int = Field(100, ge=1, description="select: PCA components fitted on the frequency group")
    width_max_components: int = Field(15, ge=1, description="select: PCA components fitted on the width group")
    variance_target: float = Field(0.99, gt=0, le=1, description="select: explained variance kept by each PCA")
    corr_threshold: float = Field(0.95, gt=0, le=1, description="select: |r| above which one of a pair is dropped")
    clip_low: float = Field(1.0, ge=0, le=100, description="select: lower outlier percentile")
    clip_high: float = Field(99.0, ge=0, le=100, description="select: upper outlier percentile")
    keep_fraction: float = Field(0.6, gt=0, le=1, description="select: fraction kept by mRMR and by RMI")
    mrmr_bins: int = Field(8, ge=2, description="select: quantile bins for mRMR discretization")
    rmi_k: int = Field(3, ge=1, description="select: neighbours for the kNN mutual information estimator")


class ModelConfig(_Section):
    svm_c: float = Field(1.0, gt=0, description="models: SVM penalty C")
    gamma: float | Literal["scale"] = Field("scale", description="models: RBF gamma, 'scale' = 1/(d*var)")
    nu: float = Field(0.1, gt=0, le=1, description="models: one-class SVM nu")
    tol: float = Field(1e-3, gt=0, description="models: SMO stopping tolerance on the max KKT violation")
    max_iter: int = Field(200_000, ge=1, description="models: SMO iteration cap")
    n_trees: int = Field(100, ge=1, description="models: isolation trees")
    max_samples: int = Field(256, ge=2, description="models: isolation-tree subsample size psi")


class EvalConfig(_Section):
    protocols: list[Literal["multiclass", "oneclass", "cross_session"]] = Field(
        ["multiclass", "oneclass", "cross_session"], description="evaluate: protocols to run"
    )
    windows: list[int] = Field([1, 2, 5, 10, 20], description="evaluate: aggregation window sizes n")
    enrol_sizes: list[int] = Field([10, 20, 40], description="evaluate: one-class enrolment sample counts")
    enrol_session_counts: list[int] = Field([1, 2, 3], description="evaluate: cross-session enrolment session counts")
    repeats: int = Field(10, ge=1, description="evaluate: repeated random enrolments")
    genuine_draws: int = Field(100, ge=1, description="evaluate: genuine attempts per user")
    impostor_draws: int = Field(10, ge=1, description="evaluate: attempts drawn from each other user")
    classifiers: list[Literal["osvm", "iforest"]] = Field(["osvm", "iforest"], description="evaluate: one-class models")
    aggregate: Literal["scores", "features"] = Field("scores", description="evaluate: aggregate decision scores or feature vectors")
    aggregate_fn: Literal["mean", "median"] = Field("mean", description="evaluate: aggregation function")
    sampling: Literal["random", "exhaustive"] = Field("random", description="evaluate: window sampling mode")
    dataset_variant: Literal["ALL", "PostFTA"] = Field("PostFTA", description="evaluate: include or exclude FTA beats")
    multiclass_selection: bool = Field(True, description="evaluate: refit feature selection inside each fold")
    selection_fraction: float = Field(
        0.5, gt=0, lt=1, description="evaluate: share of each user-session fitting the one-class selection, held out from scoring"
    )
    bootstrap: int = Field(1000, ge=10, description="evaluate: bootstrap resamples for per-user CIs")

    @field_validator("windows", "enrol_sizes", "enrol_session_counts")
    @classmethod
    def _positive_sorted(cls, v: list[int]) -> list[int]:
        if not v or any(x < 1 for x in v):
            raise ValueError("must be a non-empty list of positive integers")
        return sorted(set(v))


class PipelineConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = Field(0, description="master seed; every random draw derives from it")
    ingest: ValidationConfig = ValidationConfig()
    preprocess: PreprocessConfig = PreprocessConfig()
    beats: BeatConfig = BeatConfig()
    quality: FtaThresholds = FtaThresholds()
    features: FeatureConfig = FeatureConfig()
    selection: SelectionConfig = SelectionConfig()
    models: ModelConfig = ModelConfig()
    evaluation: EvalConfig = EvalConfig()


# ─── Loading ──────────────────────────────────────────────────────────────────

def _coerce(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _apply_override(doc: dict, dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    node = doc
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise InvalidInput(f"config key {dotted!r} does not name a section")
    node[keys[-1]] = value


def load_config(
    path: str | Path | None = None,
    overrides: list[str] | None = None,
    seed: int | None = None,
) -> PipelineConfig:
    """File, then PPG_SEED, then CLI overrides (`dotted.key=value`, JSON values)."""
    doc: dict[str, Any] = {}
    if path is not None:
        p = Path(path)
        try:
            doc = json.loads(read_text(p))
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, path=p, line=exc.lineno) from exc
        if not isinstance(doc, dict):
            raise ParseError("config must be a JSON object", path=p, line=1)

    env_seed = get_settings().PPG_SEED
    if env_seed is not None:
        doc["seed"] = env_seed

    for item in overrides or []:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise InvalidInput(f"override {item!r} must look like key.path=value")
        _apply_override(doc, key.strip(), _coerce(raw.strip()))

    if seed is not None:
        doc["seed"] = seed

    try:
        return PipelineConfig.model_validate(doc)
    except ValidationError as exc:
        where = str(path) if path is not None else "config"
        raise InvalidInput(f"{where}: {exc}") from exc


def config_keys(model: type[BaseModel] = PipelineConfig, prefix: str = "") -> list[tuple[str, Any, str]]:
    """Flattened (dotted key, default, description) rows for help output."""
    rows: list[tuple[str, Any, str]] = []
    for name, field in model.model_fields.items():
        key = f"{prefix}{name}"
        annotation = field.annotation
        if isinstance(annotation, type) and issubclass(annotation, BaseModel):
            rows.extend(config_keys(annotation, prefix=f"{key}."))
        else:
            rows.append((key, field.default, field.description or ""))
    return rows


# module that consumes each key; the longest matching dotted prefix wins
_KEY_SOURCES = {
    "seed": "ppgauth.eval.protocols",
    "ingest": "ppgauth.quality.capture",
    "preprocess": "ppgauth.signal.preprocess",
    "beats": "ppgauth.signal.beats",
    "quality": "ppgauth.quality.beat_gate",
    "features": "ppgauth.features.extract",
    "selection": "ppgauth.select.pipeline",
    "selection.fft_max_components": "ppgauth.select.pca",
    "selection.width_max_components": "ppgauth.select.pca",
    "selection.variance_target": "ppgauth.select.pca",
    "selection.corr_threshold": "ppgauth.select.filters",
    "selection.clip_low": "ppgauth.select.filters",
    "selection.clip_high": "ppgauth.select.filters",
    "selection.mrmr_bins": "ppgauth.select.mutual_info",
    "selection.rmi_k": "ppgauth.select.mutual_info",
    "models": "ppgauth.models.svm",
    "models.n_trees": "ppgauth.models.iforest",
    "models.max_samples": "ppgauth.models.iforest",
    "evaluation": "ppgauth.eval.protocols",
    "evaluation.windows": "ppgauth.eval.aggregate",
    "evaluation.aggregate": "ppgauth.eval.aggregate",
    "evaluation.aggregate_fn": "ppgauth.eval.aggregate",
    "evaluation.sampling": "ppgauth.eval.aggregate",
    "evaluation.bootstrap": "ppgauth.eval.report",
}


def config_source(key: str) -> str:
    """Module that reads `key`, for help output."""
    parts = key.split(".")
    for end in range(len(parts), 0, -1):
        source = _KEY_SOURCES.get(".".join(parts[:end]))
        if source is not None:
            return source
    raise InvalidInput(f"unknown config key {key!r}")
