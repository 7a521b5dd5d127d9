import json

import numpy as np
import pytest

from flatpsi.fiber import FiberSpec
from flatpsi.forms import Form
from flatpsi.oracle import (EvalPoint, GoldenRecord, QuadratureSpec, dump_golden, eval_form, exact_quantity,
                            fd_exterior_d, golden_quantities, load_golden, oracle_pair, oracle_psi_value,
                            quad_integral)
from flatpsi.pairing import BaseCycle
from flatpsi.scalars import TAU, Scalar


def test_eval_form_examples():
    pt = EvalPoint([0.2, 0.4])
    assert eval_form(Form.d(2, "x1"), pt, [[1, 0]]) == 1.0
    assert eval_form(Form.d(2, "x1", "x2"), pt, [[0, 1], [1, 0]]) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        eval_form(Form.d(2, "x1", "x2"), pt, [[1, 0]])


def test_eval_point_domain():
    with pytest.raises(ValueError):
        EvalPoint([0.1], (0.7, 0.6))
    with pytest.raises(ValueError):
        EvalPoint([0.1], (), 1.5)


def test_fd_exterior_d_examples():
    pt = EvalPoint([0.3], (0.4,))
    assert fd_exterior_d(Form.scalar(Scalar.param(1, "t1")), pt, [[0, 1]]) == pytest.approx(1.0, abs=1e-8)
    c = Form.scalar(Scalar.trig(1, [1]))
    assert fd_exterior_d(c, EvalPoint([0.3]), [[1]]) == pytest.approx(-TAU * np.sin(TAU * 0.3), abs=1e-7)
    closed = Form.scalar(Scalar.trig(2, [1, 2], "sin")).exterior_d() + Form.d(2, "x2", coeff=3)
    assert abs(fd_exterior_d(closed, EvalPoint([0.1, 0.7]), [[1, 0], [0.3, 1]])) < 1e-7


def test_quadrature_examples():
    t0t1 = Form.d(1, "t1", "t2", coeff=Scalar.param(1, "t1") * Scalar.barycentric_t0(1, 2))
    res = quad_integral(t0t1, FiberSpec.simplex(2), QuadratureSpec(points=6), base_point=[0.0])
    assert res.value == pytest.approx(1 / 24, abs=1e-9)
    orth = Form.d(2, "x1", "x2", coeff=Scalar.trig(2, [1, -1]))
    assert abs(quad_integral(orth, BaseCycle([1, 2]), QuadratureSpec(points=16)).value) < 1e-10
    mc = quad_integral(t0t1, FiberSpec.simplex(2), QuadratureSpec("monte_carlo", samples=200_000, seed=7),
                       base_point=[0.0])
    assert mc.seed == 7 and mc.error > 0
    assert abs(mc.value - 1 / 24) < 4 * mc.error


def test_quadrature_degree_check():
    with pytest.raises(ValueError):
        quad_integral(Form.d(2, "x1"), BaseCycle([1, 2]), QuadratureSpec(points=4))
    with pytest.raises(ValueError):
        QuadratureSpec("simpson")


def test_numeric_integrand_matches_exact_psi(golden_scenario, golden_psi):
    sc = golden_scenario
    ref, conns = sc.connections[sc.reference], sc.connections
    x = [0.31, 0.12, 0.77, 0.05, 0.6]
    for dirs in (("x1", "x2", "x4", "x5"), ("x1", "x2", "x3", "x5"), ("x2", "x3", "x4", "x5")):
        exact = float(golden_psi.form.coefficient(*dirs).evaluate(x))
        q = oracle_psi_value(sc.chains["triangle"], ref, sc.polynomial, conns, x, list(dirs),
                             QuadratureSpec(points=6, gauss_points=6))
        assert abs(q.value - exact) <= 1e-6 * max(1.0, abs(exact))


def test_oracle_pair_on_boundary_scenario(boundary_scenario):
    sc = boundary_scenario
    res = oracle_pair(sc.chains["sigma"], sc.connections[sc.reference], sc.polynomial, sc.connections,
                      sc.cycles["T1234"], QuadratureSpec(points=6, gauss_points=5))
    assert abs(res.value) < 1e-6


def test_golden_records_roundtrip(tmp_path):
    recs = [GoldenRecord("s", "pair:T", "tensor_grid", None, 1.23456789012345, 1e-9, 1e-6),
            GoldenRecord("s", "pair:T", "monte_carlo", 42, 1.2, 0.01, 0.03)]
    path = tmp_path / "g.json"
    path.write_text(dump_golden(recs, {"grid_points": 4}))
    back = load_golden(path)
    assert back[0].value == 1.23456789012
    assert back[1].seed == 42
    assert back[1].accepts(1.22) and not back[1].accepts(1.3)
    assert json.loads(path.read_text())["meta"]["grid_points"] == 4


def test_golden_quantities(golden_scenario):
    ids = [q for q, _ in golden_quantities(golden_scenario)]
    assert sum(q.startswith("pair:") for q in ids) == 5
    assert sum(q.startswith("psi_value:") for q in ids) == 5
    assert exact_quantity(golden_scenario, "psi_value:x2x3x4x5") == 0.0
    with pytest.raises(ValueError):
        exact_quantity(golden_scenario, "area:T")
