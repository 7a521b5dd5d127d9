import random

import pytest
from hypothesis import given, settings, strategies as st

from flatpsi.chernweil import Connection, is_flat
from flatpsi.families import (Chain, FlatnessError, Simplex, affine_family, boundary, face_map, family_connection,
                              is_cycle, relative_flatness_check, relative_flatness_pairwise, validate_chain)
from flatpsi.forms import MatrixForm
from flatpsi.randomized import commuting_family, rotation_gauge
from flatpsi.scalars import Scalar


def const_conn(cid, comps, n=2, m=4):
    return Connection(cid, MatrixForm.from_components(n, m, comps))


def test_boundary_examples():
    assert boundary(Chain.of("a", "b")) == Chain.of("b") - Chain.of("a")
    tri = Chain.of("a", "b") + Chain.of("b", "c") + Chain.of("c", "a")
    assert boundary(tri).is_zero()
    assert boundary(boundary(Chain.of("a", "b", "c"))).is_zero()
    assert is_cycle(tri)
    assert not is_cycle(Chain.of("a", "b"))
    assert is_cycle(Chain.of("a", "a"))


def test_chain_rejects_mixed_dimensions():
    with pytest.raises(ValueError):
        Chain([(Simplex("ab"), 1), (Simplex("abc"), 1)])
    with pytest.raises(ValueError):
        boundary(Chain.of("a"))


def test_face_maps():
    s = Simplex(("d0", "d1", "d2"))
    assert face_map((0, 1, 2), s) == s
    assert face_map((1,), Simplex(("d0", "d1"))) == Simplex(("d1",))
    assert face_map((0, 2), s) == Simplex(("d0", "d2"))
    with pytest.raises(ValueError):
        face_map((1, 0), s)
    with pytest.raises(ValueError):
        face_map((0, 3), s)


def test_affine_family():
    m = 1
    mat = [[1, 2], [3, 4]]
    d0 = Connection("d0", MatrixForm.from_components(2, m, {"x1": mat}))
    d1 = Connection("d1", MatrixForm.from_components(2, m, {"x1": [[2 * v for v in row] for row in mat]}))
    assert affine_family([d0]) == d0.one_form
    fam = affine_family([d0, d1])
    assert fam == d0.one_form * (Scalar.const(m, 1) + Scalar.param(m, "t1"))
    at_vertex = fam.map(lambda f: f.substitute_params({"t1": Scalar.const(m, 1)}))
    assert at_vertex == d1.one_form


def test_relative_flatness_examples():
    a = const_conn("a", {"x1": [[1, 0], [0, 2]], "x4": [[0, 0], [0, 5]]})
    b = const_conn("b", {"x2": [[3, 0], [0, 1]]})
    assert relative_flatness_check([a, b])
    z, o = Scalar.zero(2), Scalar.const(2, 1)
    e = Connection("e", MatrixForm.from_components(2, 2, {"x1": [[z, o], [z, z]]}))
    f = Connection("f", MatrixForm.from_components(2, 2, {"x1": [[z, z], [o, z]], "x2": [[z, o], [z, z]]}))
    assert is_flat(e)
    assert not relative_flatness_check([e, f])
    assert not relative_flatness_pairwise([e, f])
    assert relative_flatness_check([a])
    with pytest.raises(FlatnessError):
        family_connection(Simplex(("e", "f")), {"e": e, "f": f})


def test_validate_chain_reports():
    a = const_conn("a", {"x1": [[1, 0], [0, 2]]})
    b = const_conn("b", {"x2": [[1, 0], [0, 0]]})
    tri = Chain.of("a", "b") + Chain.of("b", "c") + Chain.of("c", "a")
    rep = validate_chain(tri, {"a": a, "b": b})
    assert rep.missing == ["c"] and not rep.ok
    rep = validate_chain(Chain.of("a", "b") + Chain.of("b", "a"), {"a": a, "b": b})
    assert rep.is_cycle


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3))
def test_commuting_families_are_relatively_flat(seed, n, r):
    rng = random.Random(seed)
    m = 3
    gauge = rotation_gauge(m, n, [1, 0, 1]) if n >= 2 and rng.random() < 0.5 else None
    conns = commuting_family(rng, n, m, r + 1, gauge=gauge)
    assert relative_flatness_check(conns)
    assert all(is_flat(c) for c in conns)
