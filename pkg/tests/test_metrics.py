import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynaregret.core import QuadraticLoss
from dynaregret.environments import Bursty, ConstantDrift, DecayingDrift, EnvironmentSpec, Static, generate
from dynaregret.errors import EmptyTraceError, InvalidInputError
from dynaregret.learners import OGD, OMGD, StepSchedule, recommended_step_size, run
from dynaregret.metrics import (
    TraceRecorder,
    concat_traces,
    displacements,
    dynamic_regret,
    path_length,
    realized_constants,
    regret_decomposition,
    regret_report,
    squared_path_length,
    variation_constant,
)

HALF_NORM = QuadraticLoss(np.eye(2), np.zeros(2))


def hand_trace(points, fs, finals, eta=0.5, kind=OGD):
    rec = TraceRecorder(kind, 1, 2, len(fs))
    for x, f in zip(points, fs):
        rec.record(f, np.asarray(x, float), f.c, 1, eta)
    return rec.finish(np.asarray(finals, float), len(fs))


def test_single_round_regret():
    tr = hand_trace([[1.0, 0.0]], [HALF_NORM], [0.5, 0.0])
    assert dynamic_regret(tr) == 0.5


def test_oracle_play_has_zero_regret():
    env = generate(EnvironmentSpec(drift=ConstantDrift(0.1), dim=2, T=5, kappa=3.0))
    rec = TraceRecorder(OGD, 1, 2, 5)
    for f, xs in zip(env.oracles, env.comparators):
        rec.record(f, xs, xs, 1, 0.1)
    tr = rec.finish(env.comparators[-1], 5)
    assert dynamic_regret(tr) == 0.0


def test_empty_trace_raises():
    tr = TraceRecorder(OGD, 1, 2, 0).finish(np.zeros(2), 0)
    with pytest.raises(EmptyTraceError):
        dynamic_regret(tr)
    with pytest.raises(EmptyTraceError):
        realized_constants(tr)


def test_regret_equals_independent_resummation(rng):
    env = generate(EnvironmentSpec(drift=Bursty(0.05, 0.15, 3.0), dim=4, T=5, kappa=8.0, seed=3))
    tr = run(OGD, StepSchedule.of(0.02), env)
    direct = sum(f.value(x) - f.value(xs) for f, x, xs in zip(env.oracles, tr.iterates[:-1], env.comparators))
    assert dynamic_regret(tr) == pytest.approx(direct, rel=1e-12)


@pytest.mark.parametrize(
    "path,P,S",
    [([(0, 0), (1, 0), (1, 1)], 2.0, 2.0), ([(0, 0)], 0.0, 0.0), ([(0, 0), (3, 4)], 5.0, 25.0), ([(2, 2)] * 4, 0.0, 0.0)],
)
def test_path_lengths_examples(path, P, S):
    assert path_length(path) == P
    assert squared_path_length(path) == S


def test_displacements_prepend_start():
    np.testing.assert_allclose(displacements([(3, 4), (3, 5)], x1=(0, 0)), [5.0, 1.0])
    with pytest.raises(InvalidInputError):
        displacements(np.zeros((0, 2)))


@given(pts=st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=1, max_size=30))
def test_path_lengths_agree_with_loop_oracle(pts):
    P = sum(math.dist(a, b) for a, b in zip(pts, pts[1:]))
    S = sum(math.dist(a, b) ** 2 for a, b in zip(pts, pts[1:]))
    assert path_length(pts) == pytest.approx(P, abs=1e-12)
    assert squared_path_length(pts) == pytest.approx(S, abs=1e-9)
    m = displacements(pts)
    if len(m):
        assert squared_path_length(pts) <= path_length(pts) * m.max() * (1 + 1e-12) + 1e-12


def test_variation_constant_examples():
    assert variation_constant([0.1, 0.2]) == 2.0
    assert variation_constant([0.0, 0.3]) == 1.0
    assert variation_constant([]) == 1.0


def test_realized_constants_examples():
    tr = hand_trace([[0.0, 0.0]], [HALF_NORM], [0.0, 0.0])
    prof = realized_constants(tr)
    assert prof.G == 0.0 and prof.R == 0.0
    big = hand_trace([[3.0, 4.0]], [HALF_NORM], [0.0, 0.0])
    prof = realized_constants(big)
    assert prof.G == 25.0 and prof.G_reading == "squared" and prof.R == 25.0
    small = hand_trace([[0.3, 0.4]], [HALF_NORM], [0.0, 0.0])
    assert realized_constants(small).G == 0.5 and realized_constants(small).G_reading == "norm"


def test_decomposition_zero_at_minimizer():
    tr = hand_trace([[0.0, 0.0]] * 3, [HALF_NORM] * 3, [0.0, 0.0])
    assert regret_decomposition(tr, [HALF_NORM] * 3) == (0.0, 0.0)


def test_decomposition_single_round_by_hand():
    # f = 1/2 ||x||^2, x_1 = (1, 0), eta = 0.5 -> x_2 = (0.5, 0), x* = 0, beta = 1
    tr = hand_trace([[1.0, 0.0]], [HALF_NORM], [0.5, 0.0], eta=0.5)
    R_o, R_m = regret_decomposition(tr, [HALF_NORM])
    assert R_o == pytest.approx((1.0 - 0.25) / (2 * 0.5))
    # f(x1) - f(x2) - B(x*, x1) + (beta eta - 1)/(2 eta) ||x2 - x1||^2
    assert R_m == pytest.approx((0.5 - 0.125 - 0.5) + (0.5 - 1) / 1.0 * 0.25)
    assert dynamic_regret(tr) <= R_o + R_m + 1e-12


def test_decomposition_input_errors():
    tr = hand_trace([[1.0, 0.0]], [HALF_NORM], [0.5, 0.0])
    with pytest.raises(InvalidInputError):
        regret_decomposition(tr, [HALF_NORM, HALF_NORM])
    with pytest.raises(InvalidInputError):
        regret_decomposition(dataclasses.replace(tr, iterates=tr.iterates[:-1]), [HALF_NORM])


drifts = st.sampled_from([Static(), ConstantDrift(0.05), DecayingDrift(0.2, 0.95), Bursty(0.02, 0.08, 4.0)])


@given(drift=drifts, seed=st.integers(0, 10_000), kappa=st.floats(1.0, 60.0), kind=st.sampled_from([OGD, OMGD]))
def test_decomposition_upper_bounds_regret_and_witnesses(drift, seed, kappa, kind):
    env = generate(EnvironmentSpec(drift=drift, dim=3, T=40, kappa=kappa, seed=seed))
    eta = recommended_step_size(env.alpha, env.beta) if kind == OGD else 1.0 / env.beta
    tr = run(kind, StepSchedule.of(eta), env)
    R = dynamic_regret(tr)
    R_o, R_m = regret_decomposition(tr, env.oracles)
    assert R <= R_o + R_m + 1e-9 * max(1.0, abs(R_o) + abs(R_m))
    gaps = tr.loss - tr.opt_loss
    assert np.all(gaps >= 0.5 * env.alpha * tr.dist_sq - 1e-9)
    rep = regret_report(tr)
    assert rep.path_length == pytest.approx(env.path_length, abs=1e-12)
    assert rep.squared_path_length == pytest.approx(env.squared_path_length, abs=1e-12)
    assert rep.avg_queries_per_round * tr.T == rep.total_queries


def test_regret_is_additive_under_concatenation():
    env = generate(EnvironmentSpec(drift=ConstantDrift(0.05), dim=3, T=30, kappa=5.0, seed=8))
    tr = run(OGD, StepSchedule.of(0.05), env)
    a, b = tr.window(0, 12), tr.window(12, 30)
    assert dynamic_regret(a) + dynamic_regret(b) == pytest.approx(dynamic_regret(tr), rel=1e-13)
    joined = concat_traces(a, b)
    assert np.array_equal(joined.iterates, tr.iterates)
    with pytest.raises(InvalidInputError):
        concat_traces(b, a)


def test_trace_is_read_only():
    env = generate(EnvironmentSpec(drift=ConstantDrift(0.05), dim=2, T=3, kappa=2.0))
    tr = run(OGD, StepSchedule.of(0.1), env)
    with pytest.raises(ValueError):
        tr.loss[0] = 0.0
