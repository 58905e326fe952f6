import threading
import time

import numpy as np

from ppgauth.config import get_settings
from ppgauth.orchestrator import ids_from_name
from ppgauth.signal.ingest import read_frames_raw, read_trace_csv
from ppgauth.synth import synth_dataset
from ppgauth.tasks.runner import run_parallel


def test_results_keep_input_order():
    def slow_square(k):
        time.sleep(0.001 * (10 - k))
        return k * k

    assert run_parallel(slow_square, range(10), max_workers=4) == [k * k for k in range(10)]


def test_single_worker_runs_inline():
    seen = []
    run_parallel(lambda k: seen.append(threading.get_ident()), range(5), max_workers=1)
    assert set(seen) == {threading.get_ident()}


def test_workers_from_settings(monkeypatch):
    monkeypatch.setenv("PPG_MAX_WORKERS", "1")
    get_settings.cache_clear()
    assert run_parallel(str, [3, 1, 2]) == ["3", "1", "2"]


def test_ids_from_file_name(tmp_path):
    assert ids_from_name(tmp_path / "u03_s1.csv") == ("u03", "s1")
    assert ids_from_name(tmp_path / "lab_user_7_morning.ppgf") == ("lab_user_7", "morning")
    assert ids_from_name(tmp_path / "trace.csv") == ("trace", "unknown")


def test_synthetic_dataset_is_seeded(tmp_path):
    a = synth_dataset(tmp_path / "a", n_users=3, sessions=2, seconds=6.0, seed=5)
    b = synth_dataset(tmp_path / "b", n_users=3, sessions=2, seconds=6.0, seed=5)
    assert [p.name for p in a] == ["u00_s0.csv", "u00_s1.csv", "u01_s0.csv", "u01_s1.csv", "u02_s0.csv", "u02_s1.csv"]
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes()
    trace = read_trace_csv(a[0])
    assert trace.duration == 6.0


def test_synthetic_frames_are_readable(tmp_path):
    (path,) = synth_dataset(tmp_path, n_users=1, sessions=1, seconds=2.0, fps=30.0, frames=True)
    stream = read_frames_raw(path)
    assert stream.frames.shape[0] == 60
    assert np.all(stream.frames[:, 0].mean(axis=(1, 2)) > 30)
