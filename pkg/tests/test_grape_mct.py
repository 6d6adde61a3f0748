import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from qslcontrol.grape_mct import (
    OptimizeOptions,
    _uses_kernel,
    _value_and_grad,
    _value_and_grad_eigh,
    default_t_hi,
    gradient,
    infidelity,
    infidelity_of_field,
    mct_sweep,
    optimize,
    power_law_fit,
    qsl_slack,
    t_min_from_grid,
    time_grid,
)
from qslcontrol.metrics import s2_distance
from qslcontrol.models import ControlField, propagate, random_field, spin_model, su2_model, su3_model, target_for
from qslcontrol.operator_core import pauli_matrices, random_special_unitary
from qslcontrol.qsl_bounds import model_qsl

seeds = st.integers(0, 2**32 - 1)
MODELS = {"su2": su2_model(), "su3": su3_model(), "spin1": spin_model(1), "spin2": spin_model(2)}


# =============================================================================
# Objective
# =============================================================================

def test_infidelity_basics(rng):
    sx = pauli_matrices()[0]
    assert infidelity(np.eye(2), -1j * sx) == pytest.approx(1.0)
    u = random_special_unitary(3, rng)
    assert infidelity(u, u) == pytest.approx(0.0, abs=1e-15)
    assert infidelity(np.exp(0.7j) * u, u) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        infidelity(np.eye(2), np.eye(3))


@given(st.integers(2, 4), seeds)
def test_infidelity_matches_s2(d, seed):
    rng = np.random.default_rng(seed)
    u, v = random_special_unitary(d, rng), random_special_unitary(d, rng)
    assert infidelity(u, v) == pytest.approx(1 - math.cos(s2_distance(u, v) / 2) ** 2, abs=1e-12)


@pytest.mark.parametrize("name", sorted(MODELS))
def test_gradient_finite_differences(name):
    m = MODELS[name]
    rng = np.random.default_rng(len(name))
    v = random_special_unitary(m.dim, rng)
    for _ in range(100 if m.dim <= 3 else 10):
        f = random_field(int(rng.integers(1, 12)), rng.uniform(0.2, 6.0), rng)
        g = gradient(m, f, v)
        h = 1e-6
        fd = np.empty(f.n_steps)
        for k in range(f.n_steps):
            e = np.zeros(f.n_steps)
            e[k] = h
            fd[k] = (infidelity_of_field(m, ControlField(f.values + e, f.total_time), v)
                     - infidelity_of_field(m, ControlField(f.values - e, f.total_time), v)) / (2 * h)
        scale = max(np.abs(fd).max(), 1e-3)
        assert np.abs(g - fd).max() / scale <= 1e-5


@given(seeds)
def test_fast_path_matches_reference(seed):
    rng = np.random.default_rng(seed)
    m = su3_model()
    v = random_special_unitary(3, rng)
    a = rng.uniform(-np.pi, np.pi, 10)
    j1, g1, u1 = _value_and_grad(m, v, a, 2.3)
    j2, g2, u2 = _value_and_grad_eigh(m, v, a, 2.3)
    assert j1 == pytest.approx(j2, abs=1e-13)
    np.testing.assert_allclose(g1, g2, atol=1e-12)
    np.testing.assert_allclose(u1, u2, atol=1e-12)
    np.testing.assert_allclose(u1, propagate(m, ControlField(a, 2.3)), atol=1e-12)


def test_kernel_dispatch():
    assert _uses_kernel(su2_model()) and _uses_kernel(su3_model())
    assert not _uses_kernel(spin_model(2))


def test_stationary_at_analytic_optimum():
    m = su2_model()
    v = target_for(m, "x", 1.2)
    f = ControlField(np.zeros(30), 1.2)
    assert infidelity_of_field(m, f, v) < 1e-14
    assert np.linalg.norm(gradient(m, f, v)) < 1e-8


# =============================================================================
# Optimizer
# =============================================================================

def test_exact_seed_converges_immediately():
    m = su2_model()
    r = optimize(m, target_for(m, "x", np.pi / 2), np.pi / 2, 30, np.zeros(30))
    assert r.final_infidelity <= 1e-10 and r.converged


@pytest.mark.parametrize("method", ["bfgs", "gd"])
def test_reaches_target_above_mct(method):
    m = su2_model()
    r = optimize(m, target_for(m, "z", np.pi / 2), 5.0, 30, 3, OptimizeOptions(method=method))
    assert r.converged and r.final_infidelity <= 1e-6
    assert 0.0 <= r.final_infidelity <= 1.0


def test_fails_below_short_time_bound():
    m = su2_model()
    r = optimize(m, target_for(m, "z", np.pi / 2), 0.5, 30, 0)
    assert not r.converged and r.final_infidelity > 1e-3


def test_deterministic():
    m = su3_model()
    v = target_for(m, "C", 0.5)
    a = optimize(m, v, 4.0, 30, 11)
    b = optimize(m, v, 4.0, 30, 11)
    assert a.iterations == b.iterations
    np.testing.assert_array_equal(a.field.values, b.field.values)


def test_optimize_validation():
    m = su2_model()
    with pytest.raises(ValueError):
        optimize(m, np.eye(2), 0.0)
    with pytest.raises(ValueError):
        optimize(m, np.eye(2), 1.0, 0)
    with pytest.raises(ValueError):
        optimize(m, np.eye(2), 1.0, 5, np.zeros(4))
    with pytest.raises(ValueError):
        OptimizeOptions(method="adam")


# =============================================================================
# Sweep helpers
# =============================================================================

def test_time_grid():
    g = time_grid(1.0, 0.25)
    np.testing.assert_allclose(g, [1.0, 0.75, 0.5, 0.25])
    with pytest.raises(ValueError):
        time_grid(0.1, 0.2)


def test_default_t_hi():
    m = su2_model()
    q = model_qsl(m, target_for(m, "x", 1.0))
    assert default_t_hi(q, 0.05) == pytest.approx(3.0)
    assert default_t_hi(q, 0.05, t_floor=2.12) == pytest.approx(6.4)
    assert default_t_hi(model_qsl(m, target_for(m, "x", 0.1)), 0.05) == pytest.approx(2.0)


def test_t_min_from_grid():
    grid = [(2.0, 1e-8), (1.5, 1e-6), (1.0, 1e-3)]
    assert t_min_from_grid(grid, 1e-5) == 1.5
    assert t_min_from_grid(grid, 1e-9) is None
    assert t_min_from_grid([(1.0, float("nan"))], 1.0) is None


def test_qsl_slack_small():
    assert 0 < qsl_slack(su2_model(), 1e-5) < 0.01
    assert qsl_slack(su3_model(), 1e-5) < 0.02


def test_small_sweep():
    m = su2_model()
    r = mct_sweep(m, target_for(m, "x", np.pi / 2), t_hi=2.0, n_seeds=3, patience=3)
    assert r.t_min == pytest.approx(1.6)
    assert r.qsl_check.passed
    assert np.all(np.diff(r.times) < 0)
    assert set(r.t_min_by_threshold) == {1e-4, 1e-5, 1e-6}
    assert len(r.seed_curves) == 3
    # patience leaves the unexplored tail as NaN
    assert np.isnan(r.seed_curves[0][-1])


def test_sweep_deterministic():
    m = su2_model()
    v = target_for(m, "x", 1.0)
    a = mct_sweep(m, v, t_hi=1.5, n_seeds=2, seed=5)
    b = mct_sweep(m, v, t_hi=1.5, n_seeds=2, seed=5)
    assert a.grid == b.grid


def test_sweep_extends_grid():
    # V_z(1) needs T >= sqrt(12); without t_floor the default top is 3, so the grid must grow
    m = su2_model()
    r = mct_sweep(m, target_for(m, "z", 1.0), n_seeds=2, patience=3)
    assert r.t_min is not None and r.times[0] > 2.0


def test_sweep_validation():
    m = su2_model()
    with pytest.raises(ValueError):
        mct_sweep(m, np.eye(2), n_seeds=0)


# =============================================================================
# Power law
# =============================================================================

def test_power_law_exact():
    x = np.array([0.05, 0.1, 0.2, 0.4])
    fit = power_law_fit(list(zip(x, 2 * x**0.5)))
    assert fit.a == pytest.approx(0.5) and fit.b == pytest.approx(2.0) and fit.r2 == pytest.approx(1.0)
    assert fit.inverse_power == pytest.approx(2.0)


def test_power_law_degenerate():
    fit = power_law_fit([(1, 3.0), (2, 3.0), (4, 3.0)])
    assert fit.degenerate and fit.a == 0.0 and math.isinf(fit.inverse_power)


@given(st.lists(st.tuples(st.floats(0.01, 10), st.floats(0.01, 10)), min_size=3, max_size=8))
def test_power_law_r2_range(points):
    assume(len({x for x, _ in points}) >= 2)
    fit = power_law_fit(points)
    assert fit.degenerate or 0.0 <= fit.r2 <= 1.0


def test_power_law_errors():
    with pytest.raises(ValueError):
        power_law_fit([(1, 1), (2, 2)])
    with pytest.raises(ValueError):
        power_law_fit([(1, 1), (2, -2), (3, 3)])
    with pytest.raises(ValueError):
        power_law_fit([(1, 1), (1, 2), (1, 3)])
