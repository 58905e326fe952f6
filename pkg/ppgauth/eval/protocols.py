"""
Evaluation protocols
────────────────────
multiclass      two stratified folds; scaler, optional selection and a
                one-vs-rest SVM fitted on one fold, scored on the other
oneclass        per user: random enrolment of k beats, OSVM / Isolation Forest
                fitted on it, repeated `repeats` times
cross_session   as oneclass, but enrolment takes whole sessions and genuine
                attempts come only from the held-out sessions

For each user a model yields genuine attempts (100 windows of the user's test
beats) and impostor attempts (10 windows from every other user). Every cell
draws from its own generator seeded by (seed, protocol, indices).

The one-class protocols score rows that played no part in fitting the feature
selection: `selection_split` reserves a share of every user-session for it.
"""
from __future__ import annotations

from collections import defaultdict
from collections.abc import Callable
from typing import NamedTuple

import numpy as np

from ppgauth.config import EvalConfig, ModelConfig, PipelineConfig
from ppgauth.errors import InvalidInput
from ppgauth.eval.aggregate import REDUCERS, draw_windows
from ppgauth.eval.metrics import compute_eer, rate_curve
from ppgauth.models.iforest import iforest_fit
from ppgauth.models.scaler import fit_scaler
from ppgauth.models.svm import osvm_fit, svm_fit
from ppgauth.schemas import AttemptSet, EvalCell, EvalSummary, FeatureMatrix
from ppgauth.select.pipeline import fit_selection
from ppgauth.tasks.runner import run_parallel
from ppgauth.utils.logger import get_logger

logger = get_logger(__name__)

Scorer = Callable[[np.ndarray], np.ndarray]

PROTOCOL_IDS = {"multiclass": 0, "oneclass": 1, "cross_session": 2}


class WindowResult(NamedTuple):
    eer: float
    threshold: float
    n_genuine: int
    n_impostor: int
    far: list[float]
    frr: list[float]


def cell_rng(seed: int, *indices: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *indices]))


# ─── Attempts ─────────────────────────────────────────────────────────────────

def _windowed(source: np.ndarray, n: int, draws: int, rng: np.random.Generator, ecfg: EvalConfig, scorer: Scorer) -> np.ndarray:
    windows = draw_windows(len(source), n, draws, rng, ecfg.sampling)
    reduced = REDUCERS[ecfg.aggregate_fn](source[windows], axis=1)
    return reduced if ecfg.aggregate == "scores" else scorer(reduced)


def build_attempts(
    scorer: Scorer,
    genuine: np.ndarray,
    impostors: list[np.ndarray],
    n: int,
    ecfg: EvalConfig,
    rng: np.random.Generator,
    sources: tuple[np.ndarray, list[np.ndarray]] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Aggregated genuine and impostor scores for window size n.

    In score mode `sources` may carry the per-beat scores already computed.
    Impostor users with fewer than n beats contribute nothing.
    """
    if sources is None:
        sources = _sources(scorer, genuine, impostors, ecfg)
    g_src, i_srcs = sources
    g = _windowed(g_src, n, ecfg.genuine_draws, rng, ecfg, scorer)
    parts = [_windowed(src, n, ecfg.impostor_draws, rng, ecfg, scorer) for src in i_srcs if len(src) >= n]
    return g, (np.concatenate(parts) if parts else np.empty(0))


def _sources(scorer: Scorer, genuine: np.ndarray, impostors: list[np.ndarray], ecfg: EvalConfig):
    if ecfg.aggregate == "scores":
        return scorer(genuine), [scorer(block) if len(block) else np.empty(0) for block in impostors]
    return genuine, impostors


def attempt_set(
    scorer: Scorer,
    genuine: np.ndarray,
    impostors: list[np.ndarray],
    n: int,
    ecfg: EvalConfig,
    rng: np.random.Generator,
    user_id: str,
    protocol: str,
    classifier: str,
    enrol: int | None = None,
    sources: tuple[np.ndarray, list[np.ndarray]] | None = None,
) -> AttemptSet:
    g, i = build_attempts(scorer, genuine, impostors, n, ecfg, rng, sources)
    return AttemptSet(
        user_id=user_id,
        genuine_scores=g.tolist(),
        impostor_scores=i.tolist(),
        window=n,
        protocol=protocol,
        classifier=classifier,
        enrol=enrol,
        dataset_variant=ecfg.dataset_variant,
    )


def score_attempts(attempts: AttemptSet) -> WindowResult:
    g = np.asarray(attempts.genuine_scores, dtype=np.float64)
    i = np.asarray(attempts.impostor_scores, dtype=np.float64)
    eer, threshold = compute_eer(g, i)
    far, frr = rate_curve(g, i)
    return WindowResult(eer, threshold, int(g.size), int(i.size), far, frr)


def window_results(
    scorer: Scorer,
    genuine: np.ndarray,
    impostors: list[np.ndarray],
    ecfg: EvalConfig,
    rng: np.random.Generator,
    user_id: str,
    protocol: str,
    classifier: str,
    enrol: int | None = None,
) -> dict[int, WindowResult | None]:
    sources = _sources(scorer, genuine, impostors, ecfg)
    out: dict[int, WindowResult | None] = {}
    for n in ecfg.windows:
        if len(genuine) < n:
            out[n] = None
            continue
        attempts = attempt_set(scorer, genuine, impostors, n, ecfg, rng, user_id, protocol, classifier, enrol, sources)
        out[n] = score_attempts(attempts) if attempts.impostor_scores else None
    return out


# ─── Multi-class ──────────────────────────────────────────────────────────────

def stratified_folds(labels: np.ndarray, n_folds: int, rng: np.random.Generator) -> np.ndarray:
    """Fold id per row: per-user shuffle, then round robin."""
    folds = np.empty(len(labels), dtype=np.int64)
    for user in sorted(set(labels)):
        rows = rng.permutation(np.flatnonzero(labels == user))
        folds[rows] = np.arange(rows.size) % n_folds
    return folds


def protocol_multiclass(matrix: FeatureMatrix, cfg: PipelineConfig) -> tuple[list[EvalCell], list[str]]:
    ecfg, mcfg, seed = cfg.evaluation, cfg.models, cfg.seed
    labels = matrix.user_ids.astype(str)
    users = sorted(set(labels))
    if len(users) < 2:
        raise InvalidInput("multiclass protocol needs at least two users")
    folds = stratified_folds(labels, 2, cell_rng(seed, PROTOCOL_IDS["multiclass"]))

    def run_fold(fold: int) -> dict[str, dict[int, WindowResult | None]]:
        train, test = folds != fold, folds == fold
        if ecfg.multiclass_selection:
            selection = fit_selection(matrix.rows(train), cfg.selection, seed)
            x_train = selection.transform_matrix(matrix.rows(train))
            x_test = selection.transform_matrix(matrix.rows(test))
        else:
            x_train, x_test = matrix.values[train], matrix.values[test]
        scaler = fit_scaler(x_train)
        svm = svm_fit(scaler.transform(x_train), labels[train], mcfg.svm_c, mcfg.gamma, mcfg.tol, mcfg.max_iter)
        z_test, l_test = scaler.transform(x_test), labels[test]
        logger.info("eval.fold_fitted", fold=fold, train=int(train.sum()), test=int(test.sum()))

        results = {}
        for ui, user in enumerate(users):
            if user not in svm.classes:
                continue
            impostors = [z_test[l_test == other] for other in users if other != user]
            results[user] = window_results(
                lambda z, u=user: svm.decision(z, u),
                z_test[l_test == user],
                impostors,
                ecfg,
                cell_rng(seed, PROTOCOL_IDS["multiclass"], fold, ui),
                user,
                "multiclass",
                "svm",
            )
        return results

    per_fold = run_parallel(run_fold, [0, 1])
    grouped: dict[tuple[str, int | None], list[dict]] = {
        (user, None): [fold.get(user, {}) for fold in per_fold] for user in users
    }
    return _cells("multiclass", ["svm"], grouped, ecfg, lambda res, clf: res)


# ─── One-class ────────────────────────────────────────────────────────────────

def _fit_oneclass(classifier: str, x: np.ndarray, mcfg: ModelConfig, seed: int) -> Scorer:
    if classifier == "osvm":
        model = osvm_fit(x, mcfg.nu, mcfg.gamma, mcfg.tol, mcfg.max_iter)
        return model.decision
    if classifier == "iforest":
        forest = iforest_fit(x, mcfg.n_trees, mcfg.max_samples, seed)
        return lambda z: -forest.anomaly_score(z)
    raise InvalidInput(f"unknown one-class classifier {classifier!r}")


def oneclass_cell(
    enrol: np.ndarray,
    genuine: np.ndarray,
    impostors: list[np.ndarray],
    cfg: PipelineConfig,
    rng: np.random.Generator,
    user_id: str = "",
    protocol: str = "oneclass",
    enrol_size: int | None = None,
) -> dict[str, dict[int, WindowResult | None]]:
    """Fit every configured one-class model on `enrol` and score all windows."""
    scaler = fit_scaler(enrol)
    z_enrol = scaler.transform(enrol)
    z_genuine = scaler.transform(genuine) if len(genuine) else genuine
    z_impostors = [scaler.transform(block) for block in impostors if len(block)]
    out = {}
    for classifier in cfg.evaluation.classifiers:
        scorer = _fit_oneclass(classifier, z_enrol, cfg.models, int(rng.integers(2**31)))
        out[classifier] = window_results(
            scorer, z_genuine, z_impostors, cfg.evaluation, rng, user_id, protocol, classifier, enrol_size
        )
    return out


def _user_rows(users: np.ndarray) -> tuple[list[str], dict[str, np.ndarray]]:
    ids = sorted(set(users))
    if len(ids) < 2:
        raise InvalidInput("impostor pool is empty: one-class protocols need at least two users")
    return ids, {u: np.flatnonzero(users == u) for u in ids}


def protocol_oneclass(x: np.ndarray, users: np.ndarray, cfg: PipelineConfig) -> tuple[list[EvalCell], list[str]]:
    ecfg, seed, pid = cfg.evaluation, cfg.seed, PROTOCOL_IDS["oneclass"]
    users = np.asarray(users).astype(str)
    ids, rows = _user_rows(users)
    skipped: list[str] = []
    tasks = []
    for ui, user in enumerate(ids):
        for size in ecfg.enrol_sizes:
            if size >= rows[user].size:
                skipped.append(_skip("oneclass", user, f"enrol {size} >= {rows[user].size} beats"))
                continue
            tasks.extend((ui, user, size, r) for r in range(ecfg.repeats))

    def run(task):
        ui, user, size, repeat = task
        rng = cell_rng(seed, pid, ui, size, repeat)
        enrol = rng.choice(rows[user], size=size, replace=False)
        rest = np.setdiff1d(rows[user], enrol)
        impostors = [x[rows[other]] for other in ids if other != user]
        return oneclass_cell(x[enrol], x[rest], impostors, cfg, rng, user, "oneclass", size)

    grouped = _group(tasks, run_parallel(run, tasks))
    cells, more = _cells("oneclass", ecfg.classifiers, grouped, ecfg, lambda res, clf: res[clf])
    return cells, skipped + more


def protocol_cross_session(
    x: np.ndarray,
    users: np.ndarray,
    sessions: np.ndarray,
    cfg: PipelineConfig,
) -> tuple[list[EvalCell], list[str]]:
    ecfg, seed, pid = cfg.evaluation, cfg.seed, PROTOCOL_IDS["cross_session"]
    users = np.asarray(users).astype(str)
    sessions = np.asarray(sessions).astype(str)
    ids, rows = _user_rows(users)
    skipped: list[str] = []
    tasks = []
    for ui, user in enumerate(ids):
        own = sorted(set(sessions[rows[user]]))
        for count in ecfg.enrol_session_counts:
            if len(own) <= count:
                skipped.append(_skip("cross_session", user, f"{len(own)} sessions, enrolment needs more than {count}"))
                continue
            tasks.extend((ui, user, count, r) for r in range(ecfg.repeats))

    def run(task):
        ui, user, count, repeat = task
        rng = cell_rng(seed, pid, ui, count, repeat)
        own_rows = rows[user]
        own_sessions = np.array(sorted(set(sessions[own_rows])), dtype=object)
        chosen = rng.choice(own_sessions, size=count, replace=False)
        in_enrol = np.isin(sessions[own_rows], chosen.astype(str))
        impostors = [x[rows[other]] for other in ids if other != user]
        return oneclass_cell(x[own_rows[in_enrol]], x[own_rows[~in_enrol]], impostors, cfg, rng, user, "cross_session", count)

    grouped = _group(tasks, run_parallel(run, tasks))
    cells, more = _cells("cross_session", ecfg.classifiers, grouped, ecfg, lambda res, clf: res[clf])
    return cells, skipped + more


# ─── Selection hold-out ───────────────────────────────────────────────────────

SELECTION_SPLIT_ID = 3


def selection_split(users: np.ndarray, sessions: np.ndarray, fraction: float, seed: int) -> np.ndarray:
    """Rows that fit the one-class feature selection; the rest are scored.

    Each (user, session) block gives up round(fraction * size) random rows, so
    every user keeps beats of every session on the scoring side.
    """
    users = np.asarray(users).astype(str)
    sessions = np.asarray(sessions).astype(str)
    rng = cell_rng(seed, SELECTION_SPLIT_ID)
    fit = np.zeros(users.size, dtype=bool)
    for user, session in sorted(set(zip(users, sessions))):
        rows = rng.permutation(np.flatnonzero((users == user) & (sessions == session)))
        fit[rows[: int(round(fraction * rows.size))]] = True
    return fit


# ─── Reduction ────────────────────────────────────────────────────────────────

def _skip(protocol: str, user: str, why: str) -> str:
    logger.warning("eval.user_skipped", protocol=protocol, user=user, reason=why)
    return f"{protocol}:{user}: {why}"


def _group(tasks: list[tuple], results: list) -> dict[tuple[str, int | None], list]:
    grouped: dict[tuple[str, int | None], list] = defaultdict(list)
    for (_, user, enrol, _), result in zip(tasks, results):
        grouped[(user, enrol)].append(result)
    return grouped


def _cells(
    protocol: str,
    classifiers: list[str],
    grouped: dict[tuple[str, int | None], list],
    ecfg: EvalConfig,
    pick: Callable,
) -> tuple[list[EvalCell], list[str]]:
    """Average each (user, classifier, window, enrol) over folds or repeats."""
    cells: list[EvalCell] = []
    skipped: list[str] = []
    for (user, enrol), repeats in sorted(grouped.items(), key=lambda kv: (kv[0][0], kv[0][1] or 0)):
        for classifier in classifiers:
            for n in ecfg.windows:
                found = [r for r in (pick(rep, classifier).get(n) for rep in repeats) if r is not None]
                if not found:
                    where = f"{classifier} n={n}" + (f" enrol={enrol}" if enrol is not None else "")
                    skipped.append(_skip(protocol, user, f"{where}: not enough test beats"))
                    continue
                eers = [r.eer for r in found]
                cells.append(
                    EvalCell(
                        protocol=protocol,
                        classifier=classifier,
                        user_id=user,
                        window=n,
                        enrol=enrol,
                        eer=float(np.mean(eers)),
                        eers=eers,
                        threshold=float(np.mean([r.threshold for r in found])),
                        n_genuine=found[0].n_genuine,
                        n_impostor=found[0].n_impostor,
                        far=found[0].far,
                        frr=found[0].frr,
                    )
                )
    return cells, skipped


def summarize(cells: list[EvalCell]) -> list[EvalSummary]:
    """Mean and median over users; repeats were averaged inside each cell."""
    groups: dict[tuple, list[float]] = defaultdict(list)
    for c in cells:
        groups[(c.protocol, c.classifier, c.window, c.enrol)].append(c.eer)
    return [
        EvalSummary(
            protocol=p,
            classifier=clf,
            window=n,
            enrol=enrol,
            mean_eer=float(np.mean(v)),
            median_eer=float(np.median(v)),
            n_users=len(v),
        )
        for (p, clf, n, enrol), v in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2], kv[0][3] or 0))
    ]
