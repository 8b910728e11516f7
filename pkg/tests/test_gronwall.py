import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from impvf.dsl import parse_expression
from impvf.errors import InstanceError, InvalidArgument, OracleDivergence, ProblemFormatError
from impvf.gronwall import (GronwallInstance, bound_mixed, bound_mixed_corrected, bound_profiles,
                            bound_volterra_double, bound_volterra_impulse, constant_instance,
                            equality_oracle, extrapolated_oracle, instance_stream, parse_gronwall,
                            qe_product, random_instance, solve_oracle, verify_bounds)

E = lambda s: parse_expression(s, {"tau", "sigma", "varsigma", "b"})  # noqa: E731


def expr_instance(a="1", bker="0", k1="0", k2="0", impulses=(), horizon=1.0):
    return GronwallInstance(horizon, E(a), E(bker), E(k1), E(k2),
                            tuple(t for t, _ in impulses), tuple(E(x) for _, x in impulses))


@pytest.mark.parametrize("a,c", [(1.0, 1.0), (0.5, 2.0), (2.0, 0.0)])
def test_volterra_oracle_and_bound_are_exponential(a, c):
    inst = constant_instance(a, bker=c)
    g = inst.grid(1e-3)
    u = equality_oracle(inst, g)
    np.testing.assert_allclose(u.values[:, 0], a * np.exp(c * g.nodes), rtol=1e-6)
    assert bound_volterra_impulse(inst, 1.0) == pytest.approx(a * math.exp(c), rel=1e-14)


def test_double_kernel_oracle_is_cosh():
    # u = 1 + int int 2 u  <=>  u'' = 2u, u(0) = 1, u'(0) = 0
    inst = constant_instance(1.0, k1=2.0)
    g = inst.grid(1e-3)
    u = equality_oracle(inst, g)
    np.testing.assert_allclose(u.values[:, 0], np.cosh(math.sqrt(2) * g.nodes), rtol=1e-6)
    assert bound_volterra_double(inst, 1.0) == pytest.approx(math.exp(1.0), rel=1e-14)


def test_impulse_only_instance_is_tight():
    inst = constant_instance(2.0, impulses=[(0.4, 0.5)])
    g = inst.grid(0.1)
    u = equality_oracle(inst, g)
    k = g.impulse_index[0]
    assert np.all(u.values[: k + 1, 0] == 2.0) and np.all(u.values[k + 1:, 0] == 3.0)
    assert u.right_limits[0, 0] == 3.0
    prof = bound_profiles(inst, g)["volterra_impulse"]
    np.testing.assert_array_equal(prof.left, u.values[:, 0])
    np.testing.assert_array_equal(prof.right, u.right_limits[:, 0])


def test_time_dependent_beta():
    # u(t) = 1 + t u(0.5) [t > 0.5]: u = 1 + t after the impulse, and the bound is tight
    inst = expr_instance(impulses=[(0.5, "tau")])
    g = inst.grid(0.05)
    u = equality_oracle(inst, g)
    after = g.nodes > 0.5
    np.testing.assert_allclose(u.values[after, 0], 1 + g.nodes[after], rtol=1e-15)
    assert u.right_limits[0, 0] == 1.5
    assert bound_volterra_impulse(inst, 1.0) == 2.0


@pytest.mark.parametrize("k2,u1", [("1", 3.0), ("0.5", 5.0 / 3.0), ("tau", 2.5)])
def test_mixed_oracle_closed_forms(k2, u1):
    inst = expr_instance(k2=k2)
    u = equality_oracle(inst, inst.grid(1e-3))
    assert u.values[-1, 0] == pytest.approx(u1, abs=1e-6)


def test_verbatim_mixed_bound_fails_on_counterexample(instance):
    inst = instance("gronwall_mixed_k2_1")
    assert bound_mixed(inst, 1.0) == pytest.approx(math.e, rel=1e-14)
    assert bound_mixed_corrected(inst, 1.0) is None
    reps = {r.name: r for r in verify_bounds(inst, inst.grid(1e-3))}
    assert set(reps) == {"mixed"}
    assert not reps["mixed"].passed and reps["mixed"].advisory
    assert reps["mixed"].observed_at_end == pytest.approx(3.0, abs=1e-6)


def test_corrected_bound_on_half_kernel(instance):
    inst = instance("gronwall_mixed_k2_half")
    assert bound_mixed_corrected(inst, 1.0) == pytest.approx(2.0, rel=1e-14)
    assert bound_mixed_corrected(inst, 0.25) == pytest.approx(1.25, rel=1e-14)
    reps = {r.name: r for r in verify_bounds(inst, inst.grid(1e-3))}
    assert reps["mixed_corrected"].passed
    assert reps["mixed_corrected"].observed_at_end == pytest.approx(5.0 / 3.0, abs=1e-6)
    assert qe_product(inst, inst.grid(1e-3)) == pytest.approx(0.5)


def test_tight_instance(instance):
    inst = instance("gronwall_tight")
    g = inst.grid(1e-3)
    assert equality_oracle(inst, g).values[-1, 0] == pytest.approx(2 * math.e, rel=1e-6)
    for r in verify_bounds(inst, g):
        assert r.passed
        assert r.tightness == pytest.approx(1.0, abs=1e-9)


def test_extrapolation_removes_trapezoid_bias():
    inst = constant_instance(1.0, bker=1.0)
    g = inst.grid(0.01)
    raw = abs(equality_oracle(inst, g).values[-1, 0] - math.e)
    rich = abs(extrapolated_oracle(inst, g).values[-1, 0] - math.e)
    assert rich < raw / 100


def test_zero_kernels_reduce_bit_identically():
    inst = constant_instance(1.3, bker=0.7, impulses=[(0.3, 0.4), (0.8, 1.0)])
    profs = bound_profiles(inst, inst.grid(1e-2))
    base = profs["volterra_impulse"]
    for name in ("volterra_double", "mixed", "mixed_corrected"):
        np.testing.assert_array_equal(profs[name].left, base.left)
        np.testing.assert_array_equal(profs[name].right, base.right)
    other = constant_instance(1.3, 0.7, 0.5, impulses=[(0.3, 0.4)])
    with_k1 = bound_profiles(other, other.grid(1e-2))
    np.testing.assert_array_equal(with_k1["mixed"].left, with_k1["volterra_double"].left)
    np.testing.assert_array_equal(with_k1["mixed_corrected"].left, with_k1["volterra_double"].left)


@pytest.mark.parametrize("slot,forced", [
    ("bker", "sigma + 0*tau"), ("k1", "sigma*varsigma + 0*tau"), ("k2", "0.2*varsigma + 0*tau"),
])
def test_tau_dependent_path_agrees_with_tau_free_path(slot, forced):
    plain = forced.replace(" + 0*tau", "")
    kw = dict(impulses=[(0.4, "0.5")])
    a = expr_instance(**{slot: plain}, **kw)
    b = expr_instance(**{slot: forced}, **kw)
    g = a.grid(0.02)
    np.testing.assert_allclose(equality_oracle(a, g).values, equality_oracle(b, g).values, rtol=1e-13)
    pa, pb = bound_profiles(a, g), bound_profiles(b, g)
    for name in pa:
        np.testing.assert_allclose(pa[name].left, pb[name].left, rtol=1e-13)


def test_time_dependent_kernel_soundness():
    inst = expr_instance(a="1 + tau", bker="tau*sigma", k1="tau", impulses=[(0.5, "0.5 + 0.5*tau")])
    reps = verify_bounds(inst, inst.grid(0.01))
    assert all(r.passed for r in reps if not r.advisory)


def test_oracle_divergence():
    inst = constant_instance(1.0, k2=2.0)
    with pytest.raises(OracleDivergence):
        solve_oracle(inst, inst.grid(0.01))


def test_oracle_defect_is_tiny():
    inst = constant_instance(1.0, 1.0, 1.0, 0.1, impulses=[(0.5, 0.5)])
    sol = solve_oracle(inst, inst.grid(0.01))
    assert sol.defect <= 1e-10


@pytest.mark.parametrize("kwargs,msg", [
    (dict(a="0 - 1"), "negative"),
    (dict(a="1 - tau"), "nondecreasing"),
    (dict(bker="0 - sigma"), "negative"),
    (dict(k2="1 - tau"), "nondecreasing"),
    (dict(impulses=[(0.5, "0 - 1")]), "negative"),
    (dict(impulses=[(1.5, "1")]), r"\(0,b\)"),
])
def test_instance_hypotheses_checked(kwargs, msg):
    with pytest.raises(InstanceError, match=msg):
        expr_instance(**kwargs)


def test_scalar_bound_off_grid_and_range():
    inst = constant_instance(1.0, bker=1.0)
    assert bound_volterra_impulse(inst, 1 / 3) == pytest.approx(math.exp(1 / 3), rel=1e-14)
    with pytest.raises(InvalidArgument):
        bound_volterra_impulse(inst, 1.5)
    with pytest.raises(InvalidArgument):
        bound_volterra_impulse(constant_instance(1.0, k1=1.0), 0.5)
    with pytest.raises(InvalidArgument):
        bound_volterra_double(constant_instance(1.0, k2=1.0), 0.5)


def test_random_streams_are_reproducible():
    a = instance_stream(7, 5, volterra_only=True)
    b = instance_stream(7, 5, volterra_only=True)
    for x, y in zip(a, b):
        assert x.a == y.a and x.bker == y.bker and x.k1 == y.k1 and x.impulse_times == y.impulse_times
    assert all(x.k2_zero for x in a)
    assert any(x.k1_zero for x in instance_stream(7, 40))


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=40, deadline=None)
def test_random_volterra_instances_respect_bounds(seed):
    inst = random_instance(np.random.default_rng(seed), volterra_only=True)
    assert inst.n <= 3 and all(0 <= float(x.value) <= 1 for x in inst.betas)
    for r in verify_bounds(inst, inst.grid(0.02)):
        if not r.advisory:
            assert r.passed, r


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=40, deadline=None)
def test_random_mixed_instances_respect_corrected_bound(seed):
    inst = random_instance(np.random.default_rng(seed), volterra_only=False)
    g = inst.grid(0.02)
    assert qe_product(inst, g) <= 0.9 + 1e-12
    reps = {r.name: r for r in verify_bounds(inst, g)}
    assert reps["mixed_corrected"].passed


def test_parse_instance_file(instance):
    inst = instance("gronwall_tight")
    assert inst.horizon == 1.0 and inst.impulse_times == (0.5,)
    assert inst.k1_zero and inst.k2_zero


@pytest.mark.parametrize("text,field", [
    ("[gronwall]\nhorizon = 1.0\n", "gronwall.a"),
    ('[gronwall]\na = "1"\n', "gronwall.horizon"),
    ('[gronwall]\nhorizon = 1.0\na = "1"\nc = "2"\n', "gronwall.c"),
    ('[gronwall]\nhorizon = 1.0\na = "w[0]"\n', "gronwall.a"),
    ('[gronwall]\nhorizon = 1.0\na = "1"\n[[impulses]]\ntime = 0.5\n', "impulses[0].beta"),
    ('[gronwall]\nhorizon = 1.0\na = "1 - tau"\n', "gronwall"),
])
def test_instance_file_diagnostics(text, field):
    with pytest.raises(ProblemFormatError) as info:
        parse_gronwall(text)
    assert info.value.field == field
    assert info.value.line is not None
