"""Exact secondary invariants of relatively flat connection families on tori."""
from .chernweil import (Connection, GaugeTransform, InvariantPolynomial, chern_weil, curvature, gauge_apply,
                        is_flat, transgression)
from .families import Chain, FlatnessError, NotACycleError, Simplex, affine_family, boundary, is_cycle
from .fiber import FiberSpec, PsiResult, boundary_primitive, integrate_fiber, psi, stokes_check
from .forms import Form, MatrixForm
from .pairing import BaseCycle, RZValue, pair, pair_total
from .scalars import Scalar
from .scenario import Scenario, ScenarioError, ScenarioParseError, load_scenario

__all__ = [
    "BaseCycle", "Chain", "Connection", "FiberSpec", "FlatnessError", "Form", "GaugeTransform",
    "InvariantPolynomial", "MatrixForm", "NotACycleError", "PsiResult", "RZValue", "Scalar", "Scenario",
    "ScenarioError", "ScenarioParseError", "Simplex", "affine_family", "boundary", "boundary_primitive",
    "chern_weil", "curvature", "gauge_apply", "integrate_fiber", "is_cycle", "is_flat", "load_scenario",
    "pair", "pair_total", "psi", "stokes_check", "transgression",
]
