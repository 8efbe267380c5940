import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modlattice.guard import (TailGeometry, check_assumptions, geometric_clearance,
                              sample_times, segment_distance, sign_invariant, verify)
from modlattice.waveform import CycleSchedule, WaveformCommand

W = 2 * math.pi / 1.5
T = 1.5


def sched(centers, amps, phases=None, omegas=None, cycles=None):
    n = len(centers)
    phases = phases or [0.0] * n
    omegas = omegas or [W] * n
    cycles = cycles or [0] * n
    return CycleSchedule(tuple(WaveformCommand(c, a, w, k, p)
                               for c, a, w, k, p in zip(centers, amps, omegas, cycles, phases)))


def test_assumption_examples():
    assert check_assumptions(sched([0.0, 0.0, 0.0], [2.0, 1.0, 2.5])).safe
    assert check_assumptions(sched([0.0, math.pi], [2.0, 2.0])).safe
    v = check_assumptions(sched([0.0, math.pi / 2], [2.0, 2.0]))
    assert not v.safe and v.violating_pair == (0, 1)
    assert not check_assumptions(sched([0.0, 0.0], [1, 1], omegas=[W, 2 * W])).safe
    assert not check_assumptions(sched([0.0, 0.0], [1, 1], phases=[0.0, math.pi])).safe
    assert not check_assumptions(sched([0.0, 0.0], [1, 1], cycles=[0, 1])).safe


def test_sign_invariant_examples():
    mixed = sched([0.0, math.pi, 0.0, math.pi], [2.5] * 4)
    assert sign_invariant(mixed, samples=1000).safe
    assert sign_invariant(sched([0.0, math.pi], [0.0, 0.0])).safe
    v = sign_invariant(sched([0.0, 0.0], [2.0, 2.0], phases=[0.0, math.pi]))
    assert not v.safe
    assert v.violating_pair == (0, 1)
    assert 0.0 <= v.violation_time < T / 2


def test_geometric_clearance_examples():
    for centers in itertools.product([0.0, math.pi], repeat=3):
        v = geometric_clearance(sched(list(centers), [2.75] * 3), samples=256)
        assert v.safe and v.min_clearance > 0
    anti = sched([0.0, 0.0], [2.75, 2.75], phases=[0.0, math.pi])
    v = geometric_clearance(anti)
    assert not v.safe and v.min_clearance <= 0
    single = geometric_clearance(sched([0.0], [2.75]))
    assert single.safe and single.min_clearance == math.inf


def test_sample_times_include_extrema():
    t = sample_times(T, 10)
    for q in (0.0, T / 4, T / 2, 3 * T / 4, T):
        assert np.any(np.isclose(t, q, atol=0, rtol=0))
    with pytest.raises(ValueError):
        sample_times(T, 4)


def test_segment_distance_oracle():
    a0, a1 = np.array([0.0, 0.0]), np.array([1.0, 0.0])
    assert segment_distance(a0, a1, np.array([0.5, 1.0]), np.array([0.5, 2.0])) == pytest.approx(1.0)
    assert segment_distance(a0, a1, np.array([0.5, -1.0]), np.array([0.5, 1.0])) == 0.0
    assert segment_distance(a0, a1, np.array([2.0, 0.0]), np.array([3.0, 0.0])) == pytest.approx(1.0)
    assert segment_distance(a0, a1, np.array([0.0, 1.0]), np.array([1.0, 1.0])) == pytest.approx(1.0)


@given(st.lists(st.floats(-1, 1), min_size=8, max_size=8))
@settings(max_examples=200, deadline=None)
def test_segment_distance_against_dense_sampling(c):
    p = np.array(c).reshape(4, 2)
    d = float(segment_distance(p[0], p[1], p[2], p[3]))
    s = np.linspace(0, 1, 401)
    pa = p[0] + s[:, None] * (p[1] - p[0])
    pb = p[2] + s[:, None] * (p[3] - p[2])
    brute = np.min(np.linalg.norm(pa[:, None] - pb[None], axis=-1))
    assert d <= brute + 1e-12
    assert brute - d <= 2 * 1.0 / 400 * 2.9 + 1e-9


def test_verify_deterministic():
    s = sched([0.0, math.pi, 0.0], [1.0, 2.0, 2.75])
    a = {k: v.to_dict() for k, v in verify(s).items()}
    b = {k: v.to_dict() for k, v in verify(s).items()}
    assert a == b


def test_spacing_too_small_rejected():
    with pytest.raises(ValueError):
        geometric_clearance(sched([0.0, 0.0], [1, 1]), spacing=0.1)
    with pytest.raises(ValueError):
        TailGeometry(tail_reach=-1.0)


@given(st.integers(2, 5), st.data())
@settings(max_examples=200, deadline=None)
def test_static_check_implies_dynamic_checks(n, data):
    centers = data.draw(st.lists(st.sampled_from([0.0, math.pi]), min_size=n, max_size=n))
    amps = data.draw(st.lists(st.one_of(st.just(0.0), st.floats(0.75, 2.75)), min_size=n, max_size=n))
    s = sched(centers, amps)
    assert check_assumptions(s).safe
    assert sign_invariant(s).safe
    assert geometric_clearance(s).safe


@pytest.mark.slow
def test_collision_implies_sign_violation_random_search():
    rng = np.random.default_rng(2024)
    n_trials = 100_000
    collisions = 0
    for _ in range(n_trials):
        n = int(rng.integers(2, 5))
        s = sched(list(rng.uniform(-math.pi, math.pi, n)), list(rng.uniform(0, 3.0, n)),
                  phases=list(rng.uniform(-math.pi, math.pi, n)),
                  omegas=list(W * rng.choice([1.0, 1.0, 2.0], n)))
        geo = geometric_clearance(s, samples=16)
        if not geo.safe:
            collisions += 1
            assert not sign_invariant(s, samples=16).safe
    assert collisions > 100
