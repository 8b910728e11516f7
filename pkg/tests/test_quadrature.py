import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from impvf.core import Trajectory, make_grid
from impvf.errors import GridMismatch, InvalidArgument, KernelEvalError
from impvf.quadrature import (KernelFn, cumulative, fredholm_term, integrate_samples,
                              integrate_trajectory, kernel_profile, node_position, volterra_term)


@pytest.mark.parametrize("times", [[], [0.3], [0.25, 0.8]])
def test_linear_integrands_are_exact(times):
    g = make_grid(1.0, times, 0.07)
    vals = 3.0 * g.nodes - 1.0
    np.testing.assert_allclose(cumulative(vals, g), 1.5 * g.nodes ** 2 - g.nodes, atol=1e-15)


def test_second_order_convergence():
    errs = []
    for h in (0.1, 0.05, 0.025):
        g = make_grid(1.0, [0.4], h)
        errs.append(abs(integrate_samples(np.exp(g.nodes), g) - (math.e - 1)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_right_limits_open_the_next_panel():
    # 1 on [0, 0.5], 3 on (0.5, 1]: the integral is 2 exactly
    g = make_grid(1.0, [0.5], 0.1)
    vals = np.where(g.nodes <= 0.5, 1.0, 3.0)
    assert integrate_samples(vals, g, right_limits=np.array([3.0])) == pytest.approx(2.0, abs=1e-15)
    # without the right limit the jump is smeared over one segment
    assert integrate_samples(vals, g) == pytest.approx(1.9, abs=1e-12)


@given(st.integers(0, 20), st.integers(0, 20))
@settings(max_examples=50, deadline=None)
def test_integral_is_additive(i, j):
    g = make_grid(1.0, [0.35], 0.05)
    vals = np.sin(5 * g.nodes)
    rl = np.array([2.0])
    lo, hi = min(i, j), max(i, j)
    whole = integrate_samples(vals, g, 0, hi, rl)
    assert integrate_samples(vals, g, 0, lo, rl) + integrate_samples(vals, g, lo, hi, rl) == \
        pytest.approx(whole, abs=1e-14)


def test_cumulative_along_other_axis():
    g = make_grid(1.0, [], 0.25)
    vals = np.outer([1.0, 2.0], g.nodes)
    out = cumulative(vals, g, axis=1)
    np.testing.assert_allclose(out[1], g.nodes ** 2, atol=1e-15)


def test_integrate_trajectory_vector_valued():
    g = make_grid(2.0, [1.0], 0.1)
    tr = Trajectory(g, np.column_stack([np.ones(g.size), g.nodes]), [[1.0, 1.0]])
    np.testing.assert_allclose(integrate_trajectory(tr), [2.0, 2.0], atol=1e-14)


def test_sample_count_checked():
    g = make_grid(1.0, [], 0.25)
    with pytest.raises(GridMismatch):
        cumulative(np.zeros(g.size - 1), g)


def test_node_position_by_time_and_index():
    g = make_grid(1.0, [0.5], 0.1)
    assert node_position(g, 0.5) == g.impulse_index[0]
    assert node_position(g, 3) == 3
    with pytest.raises(GridMismatch):
        node_position(g, 0.55)
    with pytest.raises(GridMismatch):
        node_position(g, g.size)


def _kernel(kind, uses_tau=True):
    # F(t, s, w) = (t + 1) * s * w
    return KernelFn(kind, lambda t, s, w: ((t + 1.0) * s)[..., None] * w, 1, uses_tau)


@pytest.mark.parametrize("kind", ["volterra", "fredholm"])
def test_profile_matches_row_by_row_terms(kind):
    g = make_grid(1.0, [0.45], 0.05)
    tr = Trajectory.from_function(g, lambda t: math.cos(t), right=lambda t: 2.0)
    k = _kernel(kind)
    prof = kernel_profile(k, tr)
    term = volterra_term if kind == "volterra" else fredholm_term
    rows = np.array([term(k, tr, i) for i in range(g.size)])
    np.testing.assert_allclose(prof, rows, rtol=1e-14, atol=1e-15)


def test_volterra_profile_against_closed_form():
    # int_0^t (t + 1) s ds = (t + 1) t^2 / 2 with w = 1
    g = make_grid(1.0, [], 1e-3)
    prof = kernel_profile(_kernel("volterra"), Trajectory.constant(g, 1.0))
    np.testing.assert_allclose(prof[:, 0], (g.nodes + 1) * g.nodes ** 2 / 2, atol=1e-15)


@pytest.mark.parametrize("kind", ["volterra", "fredholm"])
def test_tau_free_path_agrees(kind):
    g = make_grid(1.0, [0.6], 0.05)
    tr = Trajectory.from_function(g, math.exp, right=lambda t: -1.0)
    f = lambda t, s, w: np.sin(s)[..., None] * w  # noqa: E731
    a = kernel_profile(KernelFn(kind, f, 1, uses_tau=True), tr)
    b = kernel_profile(KernelFn(kind, f, 1, uses_tau=False), tr)
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-15)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_kernel_failure_is_located():
    g = make_grid(1.0, [], 0.25)
    k = KernelFn("volterra", lambda t, s, w: (1.0 / (s - 0.5))[..., None] * w, 1)
    with pytest.raises(KernelEvalError) as info:
        kernel_profile(k, Trajectory.constant(g, 1.0))
    assert info.value.sigma == 0.5


def test_term_kind_checked():
    g = make_grid(1.0, [], 0.25)
    with pytest.raises(InvalidArgument):
        volterra_term(_kernel("fredholm"), Trajectory.constant(g, 1.0), 0)
    with pytest.raises(InvalidArgument):
        KernelFn("mixed", lambda t, s, w: w, 1)
