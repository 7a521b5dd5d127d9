import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flatpsi.chernweil import (Connection, GaugeTransform, InvariantPolynomial, chern_weil, curvature, gauge_apply,
                               gauge_apply_curvature, is_flat, polarization, transgression)
from flatpsi.forms import Form, MatrixForm
from flatpsi.oracle import EvalPoint, eval_form, quad_integral, QuadratureSpec
from flatpsi.fiber import FiberSpec
from flatpsi.randomized import random_connection, rotation_gauge
from flatpsi.scalars import Scalar


def e12_e21(m=2):
    z, o = Scalar.zero(m), Scalar.const(m, 1)
    return MatrixForm.from_components(2, m, {"x1": [[z, o], [z, z]], "x2": [[z, z], [o, z]]})


def diag_volume(m=2):
    z, o = Scalar.zero(m), Scalar.const(m, 1)
    return MatrixForm.from_scalars([[o, z], [z, -o]]).map(lambda f: f ^ Form.d(m, "x1", "x2"))


def test_curvature_examples():
    a = MatrixForm.from_components(2, 1, {"x1": [[2, 0], [0, 5]]})
    assert curvature(a).is_zero()
    assert curvature(e12_e21()) == diag_volume()


def test_family_curvature_sign():
    m = 1
    mat = [[1, 2], [0, 3]]
    base = MatrixForm.from_components(2, m, {"x1": mat})
    fam = base * (Scalar.const(m, 1) + Scalar.param(m, "t1"))
    expected = MatrixForm.from_components(2, m, {"x1": mat}).map(lambda f: Form.d(m, "t1") ^ f)
    # M dx1 ^ M dx1 vanishes since dx1 ^ dx1 = 0
    assert curvature(fam) == expected
    # canonical storage is base first: -M dx1 ^ dt1
    assert curvature(fam)[0, 1].coefficient("x1", "t1") == Scalar.const(m, -2)


def test_is_flat():
    assert is_flat(Connection("d", MatrixForm.from_components(2, 4, {"x1": [[1, 0], [0, 2]], "x4": [[3, 0], [0, 0]]})))
    assert not is_flat(Connection("a", e12_e21()))
    assert is_flat(Connection.zero("z", 3, 2))


def test_chern_weil_examples():
    omega = diag_volume()
    assert chern_weil(InvariantPolynomial([1]), omega).is_zero()
    assert chern_weil(InvariantPolynomial([2]), omega).is_zero()


def test_chern_weil_cubic_matches_pointwise_oracle():
    """tr(X^3) for an abelian family curvature against direct float evaluation."""
    m = 3
    a0 = MatrixForm.from_components(1, m, {"x1": [[Scalar.trig(m, [1, 1, 0])]], "x2": [[2]]})
    a1 = MatrixForm.from_components(1, m, {"x3": [[Scalar.trig(m, [0, 1, 1], "sin")]]})
    fam = a0 + (a1 - a0) * Scalar.param(m, "t1")
    tilde = fam * Scalar.param(m, "s")
    omega = curvature(tilde)
    cw = chern_weil(InvariantPolynomial([3]), omega)
    rng = np.random.default_rng(3)
    for _ in range(5):
        pt = EvalPoint(rng.random(m), (rng.random() * 0.9,), rng.random())
        vecs = rng.normal(size=(6, m + 2))
        # n = 1: Omega^3 is the plain wedge cube of one 2-form
        w = omega[0, 0]
        assert abs(eval_form(cw, pt, vecs) - eval_form(w ^ w ^ w, pt, vecs)) < 1e-8


def test_chern_weil_product_polynomial():
    m = 4
    a = Connection("a", MatrixForm.from_components(2, m, {
        "x1": [[Scalar.trig(m, [0, 1, 0, 0]), 1], [0, 0]], "x3": [[0, 0], [Scalar.trig(m, [0, 0, 0, 1]), 1]]}))
    omega = curvature(a.one_form)
    p = InvariantPolynomial([1, 1])
    assert chern_weil(p, omega) == chern_weil(InvariantPolynomial([1]), omega) ^ chern_weil(InvariantPolynomial([1]), omega)


def test_polarization():
    m = 4
    x = curvature(e12_e21(m))
    y = MatrixForm.from_components(2, m, {"x3": [[1, 2], [0, 1]]}).map(lambda f: f ^ Form.d(m, "x4"))
    p2 = InvariantPolynomial([2])
    assert polarization(p2, [x, x]) == chern_weil(p2, x)
    assert polarization(p2, [x, y]) == (x ^ y).trace()
    assert polarization(InvariantPolynomial([3]), [x, MatrixForm.zeros(2, m), y]).is_zero()
    with pytest.raises(ValueError):
        polarization(p2, [x])


def test_transgression_examples():
    m = 2
    p2 = InvariantPolynomial([2])
    d = Connection("d", e12_e21())
    assert transgression(p2, d, d).is_zero()
    zero = Connection.zero("z", 1, 1)
    lam = Connection("l", MatrixForm.from_components(1, 1, {"x1": [[Fraction(7, 3)]]}))
    tr = transgression(p2, zero, lam)
    assert tr.is_zero()
    # the quadrature cross-check of the same integrand
    s = Scalar.param(1, "s")
    integrand = Form.d(1, "x1", "s", coeff=s * 0)
    assert abs(quad_integral(integrand, FiberSpec.interval(), QuadratureSpec(points=8), base_dirs=["x1"]).value) < 1e-9


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([[1], [2], [1, 1], [3]]))
def test_homotopy_formula_random_pairs(seed, factors):
    rng = random.Random(seed)
    m, n = 3, rng.randint(1, 2)
    d0 = random_connection(rng, "a", n, m)
    d1 = random_connection(rng, "b", n, m)
    p = InvariantPolynomial(factors)
    lhs = transgression(p, d0, d1).exterior_d()
    rhs = chern_weil(p, curvature(d1.one_form)) - chern_weil(p, curvature(d0.one_form))
    assert lhs == rhs


def test_gauge_identity_and_curvature_conjugation():
    m = 2
    g_id = GaugeTransform([[Scalar.const(m, 1), Scalar.zero(m)], [Scalar.zero(m), Scalar.const(m, 1)]],
                          [[Scalar.const(m, 1), Scalar.zero(m)], [Scalar.zero(m), Scalar.const(m, 1)]])
    d = Connection("d", e12_e21())
    assert gauge_apply(d, g_id, "d").one_form == d.one_form
    g = rotation_gauge(m, 2, [1, 0])
    moved = gauge_apply(d, g)
    assert curvature(moved.one_form) == gauge_apply_curvature(curvature(d.one_form), g)
    flat = Connection("f", MatrixForm.from_components(2, m, {"x2": [[1, 0], [0, -1]]}))
    assert is_flat(gauge_apply(flat, g))


def test_gauge_rejects_wrong_inverse():
    m = 1
    o, z = Scalar.const(m, 1), Scalar.zero(m)
    with pytest.raises(ValueError):
        GaugeTransform([[o, o], [z, o]], [[o, o], [z, o]])


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pruned_chern_weil_keeps_required_terms(seed):
    from flatpsi.randomized import commuting_family
    from flatpsi.families import affine_family

    rng = random.Random(seed)
    verts = commuting_family(rng, 2, 3, 2)
    ref = random_connection(rng, "r", 2, 3).one_form
    fam = affine_family(verts)
    omega = curvature(ref + (fam - ref) * Scalar.param(3, "s"))
    p = InvariantPolynomial([3])
    need = ("t1", "s")
    full = chern_weil(p, omega)
    kept = Form(3, {k: c for k, c in full.items() if set(need) <= set(k)})
    assert chern_weil(p, omega, require=need) == kept
