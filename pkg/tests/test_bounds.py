import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynaregret.bounds import (
    BoundInputs,
    best_J4,
    bound_envelope,
    bound_holds,
    bound_J1,
    bound_J2,
    bound_J2_additive,
    bound_J3,
    bound_J4,
    bound_Ro,
    build_report,
    check_contraction,
    check_descent_lemma,
    check_drift_recursion,
    check_proximal_equivalence,
    check_smooth_gap_lemma,
    exact_contraction_factor,
    prefix_bounds,
    path_increments,
    regularity_scaling,
    rho,
)
from dynaregret.core import Ball, Box, QuadraticLoss, Unconstrained
from dynaregret.environments import ConstantDrift, DecayingDrift, EnvironmentSpec, Static, generate, make_illconditioned_matrix
from dynaregret.errors import CurvatureError, DivergentBoundError, InvalidInputError, PreconditionError
from dynaregret.learners import OGD, OMGD, StepSchedule, inner_loop_count, recommended_step_size, run

HALF_NORM = QuadraticLoss(np.eye(2), np.zeros(2))


def inputs(**kw):
    base = dict(alpha=1.0, beta=1.0, etas=(0.5,), init_dist=0.0, P=0.0, S=0.0)
    base.update(kw)
    return BoundInputs(**base)


# -- rho ----------------------------------------------------------------------


@pytest.mark.parametrize("kappa,expected", [(1.0, 0.0), (4.0, math.sqrt(3) / 2), (2.0, 0.7071067811865476)])
def test_rho_known(kappa, expected):
    assert rho(1.0, kappa) == pytest.approx(expected, abs=1e-15)


def test_rho_rejects_bad_curvature():
    with pytest.raises(CurvatureError):
        rho(0.0, 1.0)
    with pytest.raises(CurvatureError):
        rho(2.0, 1.0)


@given(kappa=st.floats(1.0, 1e8))
def test_rho_in_unit_interval(kappa):
    assert 0.0 <= rho(1.0, kappa) < 1.0


# -- closed-form bounds: hand values -----------------------------------------


def test_J1_examples():
    assert bound_J1(inputs(S=1.0, rho_value=0.5)) == pytest.approx(6.0)
    assert bound_J1(inputs(rho_value=0.5)) == 0.0


def test_J2_examples():
    assert bound_J2(inputs(G=1.0, init_dist=1.0, P=2.0, rho_value=0.5)) == pytest.approx(6.0)
    assert bound_J2(inputs(G=3.0, init_dist=1.0, rho_value=0.5)) == pytest.approx(6.0)
    assert bound_J2_additive(inputs(G=1.0, init_dist=1.0, P=2.0, rho_value=0.5)) == pytest.approx(6.0)


def test_J3_examples():
    assert bound_J3(inputs(G=1.0, P=2.0, init_dist=1.0)) == 6.0
    assert bound_J3(inputs(G=0.0, P=2.0, init_dist=1.0)) == 0.0


def test_J4_examples():
    assert bound_J4(inputs(grad_energy=2.0, S=1.0, init_dist=1.0, sigma=1.0)) == 7.0
    assert bound_J4(inputs()) == 0.0
    with pytest.raises(PreconditionError):
        bound_J4(inputs(), sigma=0.0)
    with pytest.raises(PreconditionError):
        inputs(sigma=-1.0)


def test_best_J4_is_minimum_of_sweep():
    inp = inputs(beta=3.0, grad_energy=5.0, S=0.2, init_dist=0.1)
    value, sigma = best_J4(inp)
    sweep = [bound_J4(inp, s) for s in (1.5, 3.0, 6.0)]
    assert value == min(sweep) and sigma in (1.5, 3.0, 6.0)


def test_Ro_examples():
    assert bound_Ro(inputs(S=1.0, init_dist=1.0, rho_value=0.5)) == pytest.approx(4.0)
    assert bound_Ro(inputs(rho_value=0.5)) == 0.0


def test_Ro_varying_schedule_needs_distances():
    inp = inputs(etas=(0.5, 0.25, 0.25), S=0.0, init_dist=1.0)
    with pytest.raises(InvalidInputError):
        bound_Ro(inp, [1.0])
    # 1/(2*0.5) + 0.5 * ((4 - 2) * 3 + 0 * 5)
    assert bound_Ro(inp, [3.0, 5.0]) == pytest.approx(1.0 + 3.0)


def test_merely_convex_case():
    assert bound_J1(inputs(rho_value=1.0)) == math.inf
    assert bound_Ro(inputs(rho_value=1.0)) == math.inf
    with pytest.raises(DivergentBoundError):
        bound_J1(inputs(rho_value=1.0, S=1.0))
    with pytest.raises(DivergentBoundError):
        bound_Ro(inputs(rho_value=1.0, S=1.0))
    with pytest.raises(DivergentBoundError):
        bound_J2(inputs(rho_value=1.0))


# -- closed-form bounds: duplicate-formula oracle ----------------------------

pos = st.floats(0.0, 100.0)


@given(
    alpha=st.floats(0.01, 10.0),
    kappa=st.floats(1.0, 1e4),
    d=pos,
    P=pos,
    S=pos,
    ge=pos,
    G=pos,
    V=st.floats(1.0, 50.0),
    sigma=st.floats(0.01, 100.0),
)
def test_bounds_match_independent_formulas(alpha, kappa, d, P, S, ge, G, V, sigma):
    beta = alpha * kappa
    inp = BoundInputs(alpha, beta, (0.1,), d, P, S, ge, G, 0.0, V, sigma)
    r = math.sqrt(1 - alpha / beta)
    L = beta + beta * beta / alpha
    j1 = (1 - r + 2 * r * V) * L / (1 - r) * S + L * d * d + ge / (2 * L)
    j2 = G * d * P / (1 - r) + G / (1 - r)
    j3 = 2 * G * P + 2 * G * d
    j4 = ge / (2 * sigma) + (beta + sigma) * (2 * S + d * d)
    ro = (1 - r + 2 * r * V) / (2 * 0.1 * (1 - r)) * S + d * d / (2 * 0.1)
    for got, want in ((bound_J1(inp), j1), (bound_J2(inp), j2), (bound_J3(inp), j3), (bound_J4(inp), j4),
                      (bound_Ro(inp), ro)):
        assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_regularity_scaling_ratios_on_decaying_drift():
    """Doubling P and S (constants fixed) moves J1 by ~4x and J2 by ~2x."""
    env = generate(EnvironmentSpec(drift=DecayingDrift(2.0, 0.9), dim=4, T=100, kappa=5.0, seed=1))
    tr = run(OGD, StepSchedule.of(recommended_step_size(env.alpha, env.beta)), env)
    inp = BoundInputs.from_trace(tr)
    assert inp.grad_energy <= inp.S
    r1, r2 = regularity_scaling(inp, 2.0)
    assert r1 == pytest.approx(4.0, rel=0.05)
    assert r2 == pytest.approx(2.0, rel=0.05)


# -- checkers: hand values ---------------------------------------------------


def test_contraction_examples():
    f = QuadraticLoss(np.diag([1.0, 4.0]), np.array([1.0, 1.0]))
    res = check_contraction(f, Unconstrained(), f.c, 0.25)
    assert res.holds and res.lhs == 0.0 and res.rhs == 0.0
    res = check_contraction(HALF_NORM, Unconstrained(), np.array([3.0, -1.0]), 1.0)
    assert res.holds and res.lhs == 0.0
    with pytest.raises(PreconditionError):
        check_contraction(f, Unconstrained(), np.zeros(2), 0.3)


def test_contraction_at_one_over_beta(rng):
    for _ in range(300):
        dim = int(rng.integers(2, 9))
        f = QuadraticLoss(make_illconditioned_matrix(dim, float(rng.uniform(1, 100)), rng), rng.normal(size=dim))
        X = Unconstrained() if rng.random() < 0.5 else Ball(np.zeros(dim), np.linalg.norm(f.c) + 1.0)
        assert check_contraction(f, X, X.project(rng.normal(scale=5, size=dim)), 1.0 / f.beta).holds


def test_contraction_factor_rho_fails_for_short_steps():
    """rho does not depend on eta, but the true per-step factor 1 - eta*alpha does."""
    f = QuadraticLoss(np.diag([1.0, 4.0]), np.zeros(2))
    x = np.array([1.0, 0.0])  # along the flat direction
    res = check_contraction(f, Unconstrained(), x, 0.01)
    assert not res.holds
    assert res.lhs == pytest.approx(exact_contraction_factor(1.0, 4.0, 0.01) * 1.0)
    assert exact_contraction_factor(1.0, 4.0, 0.25) <= rho(1.0, 4.0)


def test_descent_lemma_hand_values():
    # H = I, c = 0, x_t = (1, 0), eta = 0.5: x_next = (0.5, 0)
    res = check_descent_lemma(HALF_NORM, [1.0, 0.0], [0.5, 0.0], [0.0, 0.0], 0.5)
    assert res.lhs == pytest.approx(0.5) and res.rhs == pytest.approx(0.5) and res.holds
    res = check_descent_lemma(HALF_NORM, [0.0, 0.0], None, [0.0, 0.0], 0.5)
    assert res.lhs == 0.0 and res.rhs == 0.0 and res.holds


def test_descent_lemma_input_errors():
    with pytest.raises(InvalidInputError):
        check_descent_lemma(HALF_NORM, [1.0, 0.0], [0.4, 0.0], [0.0, 0.0], 0.5)
    with pytest.raises(PreconditionError):
        check_descent_lemma(HALF_NORM, [0.5, 0.0], None, [5.0, 0.0], 0.5, Ball(np.zeros(2), 1.0))
    with pytest.raises(PreconditionError):
        check_descent_lemma(HALF_NORM, [0.5, 0.0], None, [0.0, 0.0], 0.0)


def test_smooth_gap_hand_values():
    res = check_smooth_gap_lemma(HALF_NORM, [1.0, 0.0], [0.5, 0.0], [0.0, 0.0], 1.0, 1.0)
    assert res.lhs == pytest.approx(0.375) and res.rhs == pytest.approx(0.75) and res.holds
    res = check_smooth_gap_lemma(HALF_NORM, [1.0, 0.0], [1.0, 0.0], [0.0, 0.0], 1.0, 1.0)
    assert res.lhs == 0.0 and res.holds
    with pytest.raises(PreconditionError):
        check_smooth_gap_lemma(HALF_NORM, [1.0, 0.0], [1.0, 0.0], [0.0, 0.0], 0.0, 1.0)


def test_drift_recursion_examples():
    res = check_drift_recursion([1.0, 1.0], [1.0, 1.0], [3.0, 0.0], 0.5, 2.0)
    assert res.lhs == 0.0 and res.rhs == 0.0 and res.holds
    with pytest.raises(DivergentBoundError):
        check_drift_recursion([0.0], [1.0], [0.0], 1.0, 1.0)


def test_drift_recursion_static_run():
    env = generate(EnvironmentSpec(drift=Static(), dim=3, T=30, kappa=10.0))
    tr = run(OGD, StepSchedule.of(1.0 / env.beta), env)
    r = rho(env.alpha, env.beta)
    for t in range(env.T - 1):
        res = check_drift_recursion(env.comparators[t], env.comparators[t + 1], tr.iterates[t + 1], r, env.V)
        assert res.holds and res.lhs == 0.0 and res.rhs == 0.0


def test_proximal_examples(rng):
    res = check_proximal_equivalence(HALF_NORM, np.array([2.0, -1.0]), 0.3, Unconstrained(), rng)
    assert res.holds
    np.testing.assert_allclose(res.x_next, [1.4, -0.7])
    res = check_proximal_equivalence(HALF_NORM, np.zeros(2), 0.3, Ball(np.zeros(2), 1.0), rng)
    assert res.holds and np.array_equal(res.x_next, np.zeros(2))
    with pytest.raises(PreconditionError):
        check_proximal_equivalence(HALF_NORM, np.zeros(2), 0.0, Unconstrained())


@given(seed=st.integers(0, 10_000), eta=st.floats(0.01, 3.0), box=st.booleans())
def test_inequalities_on_random_constrained_inputs(seed, eta, box):
    rng = np.random.default_rng(seed)
    f = QuadraticLoss(float(rng.uniform(0.2, 5)) * np.eye(3), rng.normal(scale=3, size=3))
    X = Box(-np.ones(3), np.ones(3)) if box else Ball(np.zeros(3), 1.5)
    x_t = X.project(rng.normal(scale=3, size=3))
    x_star = f.minimizer(X)
    eta = eta / f.beta
    assert check_descent_lemma(f, x_t, None, x_star, eta, X).holds
    x_next = X.project(x_t - eta * f.gradient(x_t))
    assert check_smooth_gap_lemma(f, x_t, x_next, x_star, 0.1, 10.0).holds
    assert check_proximal_equivalence(f, x_t, eta, X, rng, 300).holds


# -- report -------------------------------------------------------------------


@pytest.mark.parametrize("kind", [OGD, OMGD])
def test_report_flags_are_pure_functions_of_numbers(kind):
    env = generate(EnvironmentSpec(drift=ConstantDrift(0.05), dim=3, T=60, kappa=8.0, seed=4))
    eta = recommended_step_size(env.alpha, env.beta) if kind == OGD else 1.0 / env.beta
    tr = run(kind, StepSchedule.of(eta), env)
    rep = build_report(tr, env.oracles)
    for c in rep.checks.values():
        assert c.satisfied == bound_holds(c.measured, c.bound)
        assert c.slack == c.bound - c.measured
    assert rep.applicable_bound == (min(rep.J1, rep.J2) if kind == OGD else min(rep.J3, rep.J4))
    assert rep.avg_queries * rep.T == rep.total_queries
    assert rep.R_o + rep.R_m >= rep.measured_regret - 1e-9
    d = rep.to_dict()
    assert set(d["checks"]) == set(rep.checks)
    if kind == OMGD:
        assert rep.inner_steps == inner_loop_count(env.kappa)


def test_prefix_bounds_final_row_matches_closed_forms():
    env = generate(EnvironmentSpec(drift=DecayingDrift(0.3, 0.97), dim=3, T=80, kappa=12.0, seed=9))
    tr = run(OGD, StepSchedule.of(recommended_step_size(env.alpha, env.beta)), env)
    inp = BoundInputs.from_trace(tr)
    pb = prefix_bounds(tr.dist_sq, path_increments(tr), tr.grad_norm, tr.grad_star_sq, tr.alpha, tr.beta)
    for name, fn in (("J1", bound_J1), ("J2", bound_J2), ("J3", bound_J3), ("J4", bound_J4)):
        assert pb[name][-1] == pytest.approx(fn(inp), rel=1e-12)
    assert pb["V"][-1] == pytest.approx(inp.V, rel=1e-12)
    env_ = bound_envelope(tr)
    assert env_.shape == (80,) and env_[-1] == pytest.approx(min(bound_J1(inp), bound_J2(inp)), rel=1e-12)
