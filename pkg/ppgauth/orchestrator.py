"""
Pipeline Orchestrator
─────────────────────
Runs the stages in order over whole datasets: frames → traces → filtered
traces and beats (with FTA verdicts) → feature matrix → selection → models →
evaluation report. Every stage reads and writes plain files so a run can
start from any intermediate artifact.
"""
from __future__ import annotations

import time
from pathlib import Path

import numpy as np

from ppgauth.config import PipelineConfig
from ppgauth.errors import DegenerateBeat, InvalidInput
from ppgauth.eval.protocols import (
    protocol_cross_session,
    protocol_multiclass,
    protocol_oneclass,
    selection_split,
    summarize,
)
from ppgauth.features.extract import extract_all
from ppgauth.models.iforest import iforest_fit
from ppgauth.models.scaler import fit_scaler
from ppgauth.models.store import save_model
from ppgauth.models.svm import osvm_fit, svm_fit
from ppgauth.quality.beat_gate import quality_gate
from ppgauth.quality.capture import validate_trace
from ppgauth.schemas import (
    BeatRecord,
    Confidence,
    DatasetVariant,
    EvalReport,
    FeatureMatrix,
    FeatureVector,
    Trace,
    ValidationVerdict,
)
from ppgauth.select.pipeline import SelectionModel, fit_selection
from ppgauth.signal.beats import build_reference, detect_fiducials, separate_beats, slice_beat
from ppgauth.signal.ingest import extract_luma, read_frames_raw, red_channel_means
from ppgauth.signal.preprocess import preprocess
from ppgauth.tasks.runner import run_parallel
from ppgauth.utils.logger import get_logger

logger = get_logger(__name__)


def ids_from_name(path: Path) -> tuple[str, str]:
    """`<user>_<session>.<ext>` → (user, session); anything else → (stem, "unknown")."""
    user, sep, session = path.stem.rpartition("_")
    return (user, session) if sep and user else (path.stem, "unknown")


class PipelineOrchestrator:
    """Stage router; every method is a pure function of its inputs and the config."""

    # ── ingest ───────────────────────────────────────────────────────────────

    def extract(self, path: Path) -> tuple[Trace, np.ndarray]:
        stream = read_frames_raw(path)
        user, session = ids_from_name(path)
        trace = extract_luma(stream, user, session)
        trace = trace.model_copy(update={"meta": {**trace.meta, "source": path.name}})
        return trace, red_channel_means(stream)

    def validate(self, trace: Trace, red_means: np.ndarray | None, cfg: PipelineConfig) -> ValidationVerdict:
        return validate_trace(trace, red_means, cfg.ingest)

    # ── beats ────────────────────────────────────────────────────────────────

    def filter_traces(self, traces: list[Trace], cfg: PipelineConfig) -> list[Trace]:
        return run_parallel(lambda t: preprocess(t, cfg.preprocess.detrend, cfg.preprocess.lowpass), traces)

    def segment(
        self,
        filtered: list[Trace],
        cfg: PipelineConfig,
        reference: np.ndarray | None = None,
    ) -> tuple[list[BeatRecord], np.ndarray]:
        """Beats of every filtered trace with FTA verdicts and fiducials.

        Without a reference wave, the mean template of all beats is used.
        """
        bcfg = cfg.beats

        def split(trace: Trace):
            window = max(1, int(round(bcfg.smoothing_seconds * trace.fps)))
            return separate_beats(trace, bcfg.max_bpm, window, bcfg.skip_warmup)

        per_trace = run_parallel(split, filtered)
        every_beat = [b for beats in per_trace for b in beats]
        if not every_beat:
            raise InvalidInput("no beats found in any trace")
        if reference is None:
            reference = build_reference(every_beat, cfg.quality.template_length)

        def judge(beat) -> BeatRecord:
            verdict = quality_gate(beat, reference, cfg.quality)
            try:
                fid = detect_fiducials(beat)
                fiducials = {k: getattr(fid, k).index for k in ("sp", "dn", "dp", "a1", "b1", "a2", "b2")}
                confidence = fid.confidence
            except InvalidInput:
                fiducials, confidence = {}, Confidence.fallback
            return BeatRecord(
                trace=beat.trace_name or f"{beat.user_id}_{beat.session_id}",
                user_id=beat.user_id,
                session_id=beat.session_id,
                start_index=beat.start_index,
                end_index=beat.end_index,
                fps=beat.fps,
                fta=verdict.fta,
                reasons=verdict.reasons,
                dtw_value=verdict.dtw_value,
                fiducials=fiducials,
                confidence=confidence,
            )

        records = run_parallel(judge, every_beat)
        fta = sum(r.fta for r in records)
        logger.info("beats.gated", beats=len(records), fta=fta, passed=len(records) - fta)
        return records, reference

    # ── features ─────────────────────────────────────────────────────────────

    def features(self, records: list[BeatRecord], traces: dict[str, Trace], cfg: PipelineConfig) -> FeatureMatrix:
        def one(record: BeatRecord) -> FeatureVector | None:
            trace = traces.get(record.trace)
            if trace is None:
                raise InvalidInput(f"beat refers to unknown trace {record.trace!r}")
            beat = slice_beat(trace, record)
            try:
                fid = detect_fiducials(beat)
                return extract_all(beat, fid, cfg.features, fta=record.fta)
            except DegenerateBeat:
                logger.warning("features.degenerate_beat", trace=record.trace, start=record.start_index)
            except InvalidInput as exc:
                logger.warning("features.beat_skipped", trace=record.trace, start=record.start_index, error=str(exc))
            return None

        vectors = [v for v in run_parallel(one, records) if v is not None]
        if not vectors:
            raise InvalidInput("no beat produced a feature vector")
        matrix = FeatureMatrix.from_vectors(vectors)
        logger.info("features.extracted", rows=matrix.n_rows, columns=len(matrix.names))
        return matrix

    # ── select / train ───────────────────────────────────────────────────────

    def select(self, matrix: FeatureMatrix, cfg: PipelineConfig) -> SelectionModel:
        data = matrix.variant(cfg.evaluation.dataset_variant)
        return fit_selection(data, cfg.selection, cfg.seed)

    def train(self, matrix: FeatureMatrix, selection: SelectionModel, cfg: PipelineConfig, out_dir: Path) -> list[Path]:
        """Multi-class SVM over all users plus an OSVM and an Isolation Forest per user."""
        mcfg, seed = cfg.models, cfg.seed
        data = matrix.variant(cfg.evaluation.dataset_variant)
        x = selection.transform_matrix(data)
        labels = data.user_ids.astype(str)
        out_dir.mkdir(parents=True, exist_ok=True)

        scaler = fit_scaler(x)
        svm = svm_fit(scaler.transform(x), labels, mcfg.svm_c, mcfg.gamma, mcfg.tol, mcfg.max_iter)
        written = [out_dir / "scaler.json", out_dir / "svm.json"]
        save_model(scaler, written[0], seed)
        save_model(svm, written[1], seed)

        users = sorted(set(labels))

        def enrol(item: tuple[int, str]) -> list[Path]:
            ui, user = item
            own = x[labels == user]
            user_dir = out_dir / "users" / user
            user_dir.mkdir(parents=True, exist_ok=True)
            user_scaler = fit_scaler(own)
            z = user_scaler.transform(own)
            user_seed = int(np.random.SeedSequence([seed, ui]).generate_state(1)[0])
            paths = [user_dir / "scaler.json", user_dir / "osvm.json", user_dir / "iforest.json"]
            save_model(user_scaler, paths[0], seed)
            save_model(osvm_fit(z, mcfg.nu, mcfg.gamma, mcfg.tol, mcfg.max_iter), paths[1], seed)
            save_model(iforest_fit(z, mcfg.n_trees, mcfg.max_samples, user_seed), paths[2])
            return paths

        for paths in run_parallel(enrol, list(enumerate(users))):
            written.extend(paths)
        logger.info("train.models_written", users=len(users), files=len(written), out=str(out_dir))
        return written

    # ── evaluate ─────────────────────────────────────────────────────────────

    def evaluate(
        self,
        matrix: FeatureMatrix,
        cfg: PipelineConfig,
        selection: SelectionModel | None = None,
    ) -> EvalReport:
        ecfg = cfg.evaluation
        data = matrix.variant(ecfg.dataset_variant)
        counts = {
            DatasetVariant.ALL.value: matrix.n_rows,
            DatasetVariant.PostFTA.value: int((~matrix.fta).sum()),
        }
        t0 = time.monotonic()
        cells, skipped = [], []

        if "multiclass" in ecfg.protocols:
            c, s = protocol_multiclass(data, cfg)
            cells += c
            skipped += s

        oneclass = [p for p in ecfg.protocols if p != "multiclass"]
        if oneclass:
            x, users, sessions = self._oneclass_inputs(data, cfg, selection)
            if "oneclass" in oneclass:
                c, s = protocol_oneclass(x, users, cfg)
                cells += c
                skipped += s
            if "cross_session" in oneclass:
                c, s = protocol_cross_session(x, users, sessions, cfg)
                cells += c
                skipped += s

        report = EvalReport(
            dataset_variant=DatasetVariant(ecfg.dataset_variant),
            n_rows=data.n_rows,
            n_users=len(set(data.user_ids)),
            variant_counts=counts,
            config=cfg.model_dump(mode="json"),
            cells=cells,
            summaries=summarize(cells),
            skipped=skipped,
        )
        logger.info(
            "eval.report_built",
            cells=len(cells),
            skipped=len(skipped),
            latency_ms=int((time.monotonic() - t0) * 1000),
        )
        return report

    def _oneclass_inputs(
        self,
        data: FeatureMatrix,
        cfg: PipelineConfig,
        selection: SelectionModel | None,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Feature rows, users and sessions the one-class protocols score.

        A supplied selection must come from other data and is applied to every
        row. Otherwise one is fitted on the rows `selection_split` reserves and
        only the remaining rows are returned.
        """
        if selection is not None:
            return selection.transform_matrix(data), data.user_ids, data.session_ids
        has_groups = any(n.startswith("fft_") for n in data.names) and any(n.startswith("width_") for n in data.names)
        if not has_groups:
            return data.values, data.user_ids, data.session_ids
        fitted, held = self.holdout_selection(data, cfg)
        return fitted.transform_matrix(held), held.user_ids, held.session_ids

    def holdout_selection(self, data: FeatureMatrix, cfg: PipelineConfig) -> tuple[SelectionModel, FeatureMatrix]:
        """Selection fitted on the reserved rows, plus the rows left for scoring."""
        fit = selection_split(data.user_ids, data.session_ids, cfg.evaluation.selection_fraction, cfg.seed)
        held = data.rows(~fit)
        if held.n_rows == 0 or not fit.any():
            raise InvalidInput("too few rows to hold out a feature-selection split")
        logger.info("eval.selection_split", fit_rows=int(fit.sum()), scored_rows=held.n_rows)
        return fit_selection(data.rows(fit), cfg.selection, cfg.seed), held


pipeline_orchestrator = PipelineOrchestrator()
