import math

import numpy as np
import pytest

from ppgauth.errors import InvalidInput
from ppgauth.signal.dtw import dtw_cost, dtw_distance

STEPS = ((1, 0), (0, 1), (1, 1))


def _path_count(n, m):
    """Monotone warping paths across an n x m grid (Delannoy number)."""
    return sum(math.comb(n - 1, k) * math.comb(m - 1, k) * 2**k for k in range(min(n, m)))


def _exhaustive(a, b):
    """Walk every warping path; cheapest total cost, shortest path among ties."""
    n, m = len(a), len(b)
    best = [np.inf, None]

    def walk(i, j, cost, length):
        if (i, j) == (n - 1, m - 1):
            if cost < best[0] - 1e-12:
                best[:] = [cost, length]
            elif abs(cost - best[0]) <= 1e-12:
                best[1] = min(best[1], length)
            return
        for di, dj in STEPS:
            if i + di < n and j + dj < m:
                walk(i + di, j + dj, cost + abs(a[i + di] - b[j + dj]), length + 1)

    walk(0, 0, abs(a[0] - b[0]), 1)
    return best[0], best[1]


def _plain_dp(a, b):
    n, m = len(a), len(b)
    D = np.full((n + 1, m + 1), np.inf)
    D[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            D[i, j] = abs(a[i - 1] - b[j - 1]) + min(D[i - 1, j - 1], D[i - 1, j], D[i, j - 1])
    return D[n, m]


def test_identical_sequences_cost_nothing(rng):
    x = rng.normal(size=40)
    assert dtw_cost(x, x) == 0.0
    assert dtw_distance(x, x) == 0.0


def test_matches_exhaustive_path_search(rng):
    checked = 0
    while checked < 200:
        n, m = (int(v) for v in rng.integers(1, 11, size=2))
        if _path_count(n, m) > 3000:
            continue
        a, b = rng.normal(size=n), rng.normal(size=m)
        checked += 1
        cost, length = _exhaustive(a, b)
        assert dtw_cost(a, b) == pytest.approx(cost, abs=1e-9)
        assert dtw_distance(a, b) == pytest.approx(cost / length, abs=1e-9)


def test_matches_quadratic_recurrence(rng):
    for _ in range(200):
        a = rng.normal(size=rng.integers(1, 11))
        b = rng.normal(size=rng.integers(1, 11))
        assert dtw_cost(a, b) == pytest.approx(_plain_dp(a, b), abs=1e-9)


def test_symmetric(rng):
    a, b = rng.normal(size=17), rng.normal(size=23)
    assert dtw_cost(a, b) == pytest.approx(dtw_cost(b, a), abs=1e-12)
    assert dtw_distance(a, b) == pytest.approx(dtw_distance(b, a), abs=1e-12)


def test_time_shift_is_absorbed():
    base = np.sin(np.linspace(0, 2 * np.pi, 50))
    shifted = np.concatenate([[base[0]] * 5, base])
    assert dtw_cost(base, shifted) == pytest.approx(0.0, abs=1e-12)


def test_empty_input():
    with pytest.raises(InvalidInput):
        dtw_cost(np.array([]), np.array([1.0]))
