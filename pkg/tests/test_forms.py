import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flatpsi.forms import Form, MatrixForm, matrix_wedge
from flatpsi.oracle import EvalPoint, eval_form, fd_exterior_d
from flatpsi.randomized import random_form
from flatpsi.scalars import SIN, Scalar


def test_wedge_basics():
    m = 2
    dx1, dx2, dt1 = Form.d(m, "x1"), Form.d(m, "x2"), Form.d(m, "t1")
    assert (dx1 ^ dx1).is_zero()
    assert dx1 ^ dt1 == -(dt1 ^ dx1)
    t1 = Scalar.param(m, "t1")
    lhs = Form.d(m, "x1", coeff=t1) ^ Form.d(m, "x2", coeff=Scalar.const(m, 1) - t1)
    assert lhs == Form.d(m, "x1", "x2", coeff=t1 * (Scalar.const(m, 1) - t1))
    assert Form.d(m, "x2", "x1") == -(dx1 ^ dx2)


def test_exterior_d_examples():
    m = 2
    assert Form.scalar(Scalar.param(m, "t1")).exterior_d() == Form.d(m, "t1")
    w = Form.d(m, "x2", coeff=Scalar.trig(m, [1, 0]))
    expected = Form.d(m, "x1", "x2", coeff=Scalar.trig(m, [1, 0], SIN, -1, tau_pow=1))
    assert w.exterior_d() == expected


def test_exterior_d_matches_finite_differences():
    m = 2
    w = Form.d(m, "x2", coeff=Scalar.trig(m, [1, 0]))
    dw = w.exterior_d()
    rng = np.random.default_rng(5)
    for _ in range(20):
        pt = EvalPoint(rng.random(m))
        vecs = rng.normal(size=(2, m))
        assert abs(eval_form(dw, pt, vecs) - fd_exterior_d(w, pt, vecs)) < 1e-7


def test_bidegree_components():
    m = 2
    w = Form.d(m, "x1", "t1") + Form.d(m, "x1", "x2")
    assert w.bidegree_component(1, 1) == Form.d(m, "x1", "t1")
    mixed = Form.d(m, "t1") ^ Form.d(m, "x1", coeff=Scalar.trig(m, [1, 1]))
    assert mixed.bidegree_component(2, 0).is_zero()


def test_matrix_wedge_commutator():
    m = 2
    z, o = Scalar.zero(m), Scalar.const(m, 1)
    a = MatrixForm.from_components(2, m, {"x1": [[z, o], [z, z]], "x2": [[z, z], [o, z]]})
    aa = matrix_wedge(a, a)
    expected = MatrixForm.from_scalars([[o, z], [z, -o]]).map(lambda f: f ^ Form.d(m, "x1", "x2"))
    assert aa == expected


def test_matrix_trace_and_d():
    m = 3
    f = Form.d(m, "x1", coeff=Scalar.trig(m, [1, 0, 2]))
    ident = MatrixForm.identity(3, m).map(lambda e: e ^ f)
    assert ident.trace() == f * 3
    const = MatrixForm.from_components(2, m, {"x1": [[1, 2], [3, 4]], "x3": [[0, 1], [1, 0]]})
    assert const.exterior_d().is_zero()


def test_degree_and_params():
    m = 2
    w = Form.d(m, "x1", "t1", coeff=Scalar.param(m, "s"))
    assert w.degree() == 2
    assert w.params() == {"t1", "s"}
    with pytest.raises(ValueError):
        (w + Form.const(m, 1)).degree()
    with pytest.raises(ValueError):
        Form.d(2, "x3")


def test_pullback_of_parameters():
    m = 1
    w = Form.d(m, "x1", "t1", coeff=Scalar.param(m, "t1"))
    # t1 -> 1 - t2 reverses dt1
    pulled = w.substitute_params({"t1": Scalar.const(m, 1) - Scalar.param(m, "t2")})
    assert pulled == Form.d(m, "x1", "t2", coeff=Scalar.param(m, "t2") - Scalar.const(m, 1))


seeds = st.integers(0, 2**32 - 1)


def _pair(seed):
    rng = random.Random(seed)
    m = rng.randint(1, 4)
    params = ["t1", "t2"][: rng.randint(0, 2)]
    a = random_form(rng, m, params, rng.randint(0, 2))
    b = random_form(rng, m, params, rng.randint(0, 2))
    return a, b


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_d_squared_zero(seed):
    a, _ = _pair(seed)
    assert a.exterior_d().exterior_d().is_zero()


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_leibniz_and_graded_commutativity(seed):
    a, b = _pair(seed)
    if a.is_zero() or b.is_zero():
        return
    p, q = a.degree(), b.degree()
    assert (a ^ b).exterior_d() == (a.exterior_d() ^ b) + (a ^ b.exterior_d()) * (-1) ** p
    assert a ^ b == (b ^ a) * (-1) ** (p * q)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_symbolic_evaluation_matches_oracle(seed):
    rng = random.Random(seed)
    m = 3
    w = random_form(rng, m, ["t1"], 2)
    nrng = np.random.default_rng(seed)
    pt = EvalPoint(nrng.random(m), (0.3,))
    vecs = nrng.normal(size=(2, m + 1))
    val = eval_form(w, pt, vecs)
    direct = sum(
        float(c.evaluate(pt.x, pt.params())) * np.linalg.det(vecs[:, [pt.names.index(d) for d in key]])
        for key, c in w.items()
    )
    assert abs(val - direct) < 1e-10
