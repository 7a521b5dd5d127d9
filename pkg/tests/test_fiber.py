import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from flatpsi import fiber
from flatpsi.chernweil import Connection, InvariantPolynomial
from flatpsi.families import Chain, FlatnessError, NotACycleError, boundary
from flatpsi.fiber import (FiberSpec, boundary_primitive, integrate_fiber, noninvariance_warning, psi,
                           psi_compare_reference, simplex_moment, stokes_check)
from flatpsi.forms import Form, MatrixForm
from flatpsi.oracle import QuadratureSpec, quad_integral
from flatpsi.randomized import random_form
from flatpsi.scalars import Scalar


def test_simplex_moment_examples():
    assert simplex_moment([0, 0, 0]) == Fraction(1, 2)
    assert simplex_moment([1, 1, 0]) == Fraction(1, 24)
    assert simplex_moment([2, 0]) == Fraction(1, 3)
    grid = quad_integral(lambda X, T, S: T[:, 0] * (1 - T[:, 0] - T[:, 1]), FiberSpec.simplex(2),
                         QuadratureSpec(points=8), m=1)
    assert abs(grid.value - 1 / 24) < 1e-9


def test_integrate_fiber_examples():
    m = 1
    assert integrate_fiber(Form.d(m, "t1"), FiberSpec.simplex(1)) == Form.const(m, 1)
    f = Scalar.trig(m, [1])
    w = Form.d(m, "x1", "t1", coeff=f * Scalar.param(m, "t1"))
    # base first: the fiber volume already sits rightmost
    assert integrate_fiber(w, FiberSpec.simplex(1)) == Form.d(m, "x1", coeff=f * Fraction(1, 2))
    assert integrate_fiber(Form.d(m, "t1", "x1", coeff=f), FiberSpec.simplex(1)) == Form.d(m, "x1", coeff=-f)
    base_only = Form.d(m, "x1", coeff=f)
    assert integrate_fiber(base_only, FiberSpec.simplex(1)).is_zero()


def test_stokes_examples():
    m = 2
    pulled = Form.d(m, "x1", coeff=Scalar.trig(m, [1, 1]))
    assert stokes_check(pulled, FiberSpec.simplex(1)).is_zero()
    t1dx1 = Form.d(1, "x1", coeff=Scalar.param(1, "t1"))
    assert stokes_check(t1dx1, FiberSpec.simplex(1)).is_zero()


def _stokes_forms(seed):
    rng = random.Random(seed)
    fib = rng.choice([FiberSpec.simplex(1), FiberSpec.simplex(2), FiberSpec.simplex_interval(1)])
    m = rng.randint(1, 3)
    params = list(fib.t_vars) + list(fib.s_vars)
    return fib, random_form(rng, m, params, rng.randint(fib.dim - 1, fib.dim + 2))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_stokes_random(seed):
    fib, w = _stokes_forms(seed)
    assert stokes_check(w, fib).is_zero()


def test_standard_sign_table_breaks_stokes(monkeypatch):
    """Regression for the frozen boundary signs: the textbook table leaves a residual."""
    w = Form.d(1, "x1", coeff=Scalar.param(1, "t1"))
    assert stokes_check(w, FiberSpec.simplex(1)).is_zero()
    for i in range(8):
        monkeypatch.setitem(fiber.SIMPLEX_FACE_SIGN, i, (-1) ** i)
    monkeypatch.setitem(fiber.INTERVAL_END_SIGN, 1, 1)
    monkeypatch.setitem(fiber.INTERVAL_END_SIGN, 0, -1)
    assert not stokes_check(w, FiberSpec.simplex(1)).is_zero()
    ws = Form.d(1, "x1", coeff=Scalar.param(1, "s"))
    assert not stokes_check(ws, FiberSpec.interval()).is_zero()


def test_frozen_sign_tables():
    assert [fiber.SIMPLEX_FACE_SIGN[i] for i in range(4)] == [-1, 1, -1, 1]
    assert fiber.INTERVAL_END_SIGN == {1: -1, 0: 1}


def test_noninvariance_warning():
    assert noninvariance_warning(2, 2) and noninvariance_warning(3, 2)
    assert noninvariance_warning(3, 1) is None and noninvariance_warning(1, 2) is None


def test_psi_p_less_than_r_is_zero(abelian_scenario):
    sc = abelian_scenario
    name, chain = sc.chain(None)
    res = psi(chain, sc.connections[sc.reference], sc.polynomial, sc.connections)
    assert (res.p, res.r) == (1, 2)
    assert res.form.is_zero()
    assert res.sign_applied == -1


def test_psi_of_boundary_chain(boundary_scenario):
    sc = boundary_scenario
    ref, p, conns = sc.connections[sc.reference], sc.polynomial, sc.connections
    res = psi(sc.chains["sigma"], ref, p, conns)
    assert res.form.is_zero()
    eta = boundary_primitive(sc.chains["K"], ref, p, conns)
    assert not eta.is_zero()
    assert eta.exterior_d().is_zero()


def test_psi_golden_closed_and_exact(golden_scenario, golden_psi):
    sc = golden_scenario
    form = golden_psi.form
    assert golden_psi.degree == 4
    assert not form.is_zero()
    assert form.exterior_d().is_zero()
    # the triangle bounds the 2-simplex on its vertices, so psi is d(eta)
    # (up to reversing the edge (D1,D3), which flips the sign of its integral)
    ref, p, conns = sc.connections[sc.reference], sc.polynomial, sc.connections
    k = Chain.of("D1", "D2", "D3")
    assert psi(boundary(k), ref, p, conns).form == form
    eta = boundary_primitive(k, ref, p, conns)
    assert eta.exterior_d() == form


def test_psi_rejects_bad_inputs(golden_scenario):
    sc = golden_scenario
    ref, p, conns = sc.connections[sc.reference], sc.polynomial, sc.connections
    with pytest.raises(NotACycleError):
        psi(Chain.of("D1", "D2"), ref, p, conns)
    z, o = Scalar.zero(5), Scalar.const(5, 1)
    bent = Connection("bent", MatrixForm.from_components(2, 5, {"x1": [[z, o], [z, z]], "x2": [[z, z], [o, z]]}))
    with pytest.raises(FlatnessError):
        psi(sc.chains["triangle"], bent, p, conns)
    with pytest.raises(KeyError):
        psi(Chain.of("D1", "Q") + Chain.of("Q", "D1"), ref, p, conns)


def test_reference_comparison_gated():
    m, n = 2, 1
    conns = {c: Connection(c, MatrixForm.from_components(n, m, {"x1": [[k]]})) for c, k in (("a", 1), ("b", 2))}
    tri = Chain.of("a", "b") + Chain.of("b", "a")
    p = InvariantPolynomial([2])
    with pytest.raises(ValueError):
        psi_compare_reference(tri, conns["a"], conns["b"], p, [], conns)
    assert psi_compare_reference(tri, conns["a"], conns["b"], p, [], conns, allow_noninvariant=True) == []


def test_psi_is_linear_in_the_chain(golden_scenario):
    sc = golden_scenario
    ref, p, conns = sc.connections[sc.reference], sc.polynomial, sc.connections
    tri = sc.chains["triangle"]
    double = psi(tri * 2, ref, p, conns).form
    assert double == psi(tri, ref, p, conns).form * 2


def test_boundary_primitive_sign_for_edges(golden_scenario):
    sc = golden_scenario
    ref, conns = sc.connections[sc.reference], sc.connections
    k = Chain.of("D1", "D2")
    p = InvariantPolynomial([2])
    lhs = fiber.psi_form(boundary(k), ref, p, conns, strict=False)
    assert not lhs.is_zero()
    assert boundary_primitive(k, ref, p, conns).exterior_d() == lhs
