import numpy as np
import pytest
from scipy.stats import ttest_rel

from ppgauth.config import EvalConfig, ModelConfig, PipelineConfig, SelectionConfig
from ppgauth.errors import InvalidInput
from ppgauth.eval.protocols import (
    attempt_set,
    build_attempts,
    protocol_cross_session,
    protocol_multiclass,
    protocol_oneclass,
    score_attempts,
    selection_split,
    stratified_folds,
    summarize,
    window_results,
)
from ppgauth.orchestrator import pipeline_orchestrator
from ppgauth.schemas import DatasetVariant
from ppgauth.synth import gaussian_feature_users


def _config(**evaluation) -> PipelineConfig:
    base = dict(windows=[1, 20], enrol_sizes=[40], enrol_session_counts=[1], repeats=3, multiclass_selection=False, bootstrap=100)
    base.update(evaluation)
    return PipelineConfig(seed=3, models=ModelConfig(n_trees=40), evaluation=EvalConfig(**base))


def _first_column(z):
    return z[:, 0]


def _mean_eer(cells, classifier, window):
    return float(np.mean([c.eer for c in cells if c.classifier == classifier and c.window == window]))


def test_attempt_counts(rng):
    users = [rng.normal(size=(60, 3)) for _ in range(15)]
    g, i = build_attempts(lambda z: z[:, 0], users[0], users[1:], 5, EvalConfig(), rng)
    assert g.size == 100
    assert i.size == 140


def test_attempt_set_for_fifteen_users(rng):
    users = [rng.normal(size=(60, 3)) for _ in range(15)]
    attempts = attempt_set(lambda z: z[:, 0], users[0], users[1:], 5, EvalConfig(), rng, "u00", "oneclass", "osvm", enrol=40)
    assert len(attempts.genuine_scores) == 100
    assert len(attempts.impostor_scores) == 140
    assert (attempts.user_id, attempts.window, attempts.enrol) == ("u00", 5, 40)
    assert attempts.dataset_variant is DatasetVariant.PostFTA


def test_window_results_score_their_attempt_sets(rng):
    users = [rng.normal(size=(60, 3)) for _ in range(15)]
    ecfg = EvalConfig(windows=[1, 5])
    results = window_results(_first_column, users[0], users[1:], ecfg, np.random.default_rng(3), "u00", "oneclass", "osvm")
    first = attempt_set(_first_column, users[0], users[1:], 1, ecfg, np.random.default_rng(3), "u00", "oneclass", "osvm")
    assert results[1] == score_attempts(first)
    assert (results[5].n_genuine, results[5].n_impostor) == (100, 140)


def test_short_impostors_contribute_nothing(rng):
    g, i = build_attempts(lambda z: z[:, 0], rng.normal(size=(30, 2)), [rng.normal(size=(3, 2)), rng.normal(size=(9, 2))], 5, EvalConfig(), rng)
    assert i.size == 10


def test_folds_are_stratified(gaussian_users, rng):
    folds = stratified_folds(gaussian_users.user_ids, 2, rng)
    for user in set(gaussian_users.user_ids):
        assert np.bincount(folds[gaussian_users.user_ids == user]).tolist() == [60, 60]


def test_multiclass_separates_distinct_users(gaussian_users, small_config):
    cells, skipped = protocol_multiclass(gaussian_users, small_config)
    assert skipped == []
    assert {c.user_id for c in cells} == set(gaussian_users.user_ids)
    assert {c.window for c in cells} == {1, 20}
    assert _mean_eer(cells, "svm", 20) < 0.02
    assert all(len(c.eers) == 2 for c in cells)


def test_multiclass_shuffled_labels_is_chance(gaussian_users, small_config):
    shuffled = gaussian_users.model_copy(update={"user_ids": np.random.default_rng(0).permutation(gaussian_users.user_ids)})
    cells, _ = protocol_multiclass(shuffled, small_config)
    assert _mean_eer(cells, "svm", 1) == pytest.approx(0.5, abs=0.05)


def test_multiclass_needs_two_users(gaussian_users, small_config):
    one = gaussian_users.rows(gaussian_users.user_ids == "u00")
    with pytest.raises(InvalidInput):
        protocol_multiclass(one, small_config)


def test_oneclass_osvm_authenticates(gaussian_users, small_config):
    cells, skipped = protocol_oneclass(gaussian_users.values, gaussian_users.user_ids, small_config)
    assert skipped == []
    assert {c.classifier for c in cells} == {"osvm", "iforest"}
    assert all(c.enrol == 40 and len(c.eers) == 3 for c in cells)
    assert _mean_eer(cells, "osvm", 20) <= 0.05


def test_single_beat_enrolment_runs(gaussian_users):
    cells, _ = protocol_oneclass(gaussian_users.values, gaussian_users.user_ids, _config(enrol_sizes=[1], windows=[1], classifiers=["osvm"]))
    assert len(cells) == 15
    assert all(0.0 <= c.eer <= 1.0 for c in cells)


def test_enrolment_as_large_as_the_user_is_skipped(gaussian_users):
    cells, skipped = protocol_oneclass(gaussian_users.values, gaussian_users.user_ids, _config(enrol_sizes=[120], classifiers=["osvm"]))
    assert cells == []
    assert len(skipped) == 15


def test_oneclass_needs_impostors(gaussian_users, small_config):
    one = gaussian_users.user_ids == "u03"
    with pytest.raises(InvalidInput):
        protocol_oneclass(gaussian_users.values[one], gaussian_users.user_ids[one], small_config)


def test_session_drift_raises_cross_session_error():
    cfg = _config(windows=[1], classifiers=["osvm"])
    eers = {}
    for drift in (0.0, 2.0):
        m = gaussian_feature_users(n_users=10, per_user=120, dims=6, separation=3.0, sessions=3, drift=drift, seed=5)
        cells, skipped = protocol_cross_session(m.values, m.user_ids, m.session_ids, cfg)
        assert skipped == []
        eers[drift] = [c.eer for c in sorted(cells, key=lambda c: c.user_id)]
    assert ttest_rel(eers[2.0], eers[0.0], alternative="greater").pvalue < 0.05


def test_no_drift_cross_session_close_to_oneclass():
    cfg = _config(windows=[1], classifiers=["osvm"])
    m = gaussian_feature_users(n_users=10, per_user=120, dims=6, separation=3.0, sessions=3, drift=0.0, seed=5)
    cross, _ = protocol_cross_session(m.values, m.user_ids, m.session_ids, cfg)
    within, _ = protocol_oneclass(m.values, m.user_ids, cfg)
    assert _mean_eer(cross, "osvm", 1) == pytest.approx(_mean_eer(within, "osvm", 1), abs=0.05)


def test_single_session_users_are_skipped(gaussian_users, small_config):
    cells, skipped = protocol_cross_session(gaussian_users.values, gaussian_users.user_ids, gaussian_users.session_ids, small_config)
    assert cells == []
    assert len(skipped) == 15
    assert all(s.startswith("cross_session:") for s in skipped)


def test_protocols_are_deterministic(gaussian_users):
    cfg = _config(classifiers=["osvm", "iforest"], repeats=2)
    first, _ = protocol_oneclass(gaussian_users.values, gaussian_users.user_ids, cfg)
    second, _ = protocol_oneclass(gaussian_users.values, gaussian_users.user_ids, cfg)
    assert first == second


def test_summaries_cover_configured_windows_only(gaussian_users, small_config):
    cells, _ = protocol_oneclass(gaussian_users.values, gaussian_users.user_ids, small_config)
    summaries = summarize(cells)
    assert {s.window for s in summaries} == {1, 20}
    assert all(s.n_users == 15 for s in summaries)
    for s in summaries:
        own = [c.eer for c in cells if (c.classifier, c.window) == (s.classifier, s.window)]
        assert s.mean_eer == pytest.approx(np.mean(own))


def test_oneclass_cells_hold_full_attempt_sets(gaussian_users, small_config):
    cells, _ = protocol_oneclass(gaussian_users.values, gaussian_users.user_ids, small_config)
    assert all((c.n_genuine, c.n_impostor) == (100, 140) for c in cells)


# ─── Selection hold-out ───────────────────────────────────────────────────────

def test_selection_split_takes_a_share_of_every_session():
    users = np.array(["a"] * 10 + ["b"] * 8, dtype=object)
    sessions = np.array(["s0"] * 6 + ["s1"] * 4 + ["s0"] * 8, dtype=object)
    fit = selection_split(users, sessions, 0.5, seed=1)
    assert [int(fit[:6].sum()), int(fit[6:10].sum()), int(fit[10:].sum())] == [3, 2, 4]
    np.testing.assert_array_equal(fit, selection_split(users, sessions, 0.5, seed=1))


def test_oneclass_selection_ignores_scored_rows(beat_features):
    cfg = PipelineConfig(seed=5, selection=SelectionConfig(fft_max_components=8, width_max_components=4))
    fit = selection_split(beat_features.user_ids, beat_features.session_ids, cfg.evaluation.selection_fraction, cfg.seed)
    column = next(i for i, n in enumerate(beat_features.names) if not n.startswith(("fft_", "width_")))
    codes = np.unique(beat_features.user_ids.astype(str), return_inverse=True)[1]

    # the planted column names the user exactly, but only on rows that get scored
    planted = beat_features.values.copy()
    planted[~fit, column] = 100.0 * codes[~fit]
    leaky = beat_features.model_copy(update={"values": planted})

    clean_model, clean_rows = pipeline_orchestrator.holdout_selection(beat_features, cfg)
    leaky_model, leaky_rows = pipeline_orchestrator.holdout_selection(leaky, cfg)
    assert leaky_model.selected == clean_model.selected
    assert leaky_model.mrmr_scores == clean_model.mrmr_scores
    assert clean_rows.n_rows == int((~fit).sum())
    np.testing.assert_array_equal(leaky_rows.values[:, column], 100.0 * codes[~fit])
