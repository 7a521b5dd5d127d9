"""Connections on the trivial rank-n bundle over T^m and their Chern-Weil forms."""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .forms import Form, MatrixForm, matrix_wedge, wedge
from .scalars import Scalar

MAX_POLARIZATION_DEGREE = 5


@dataclass(frozen=True)
class Connection:
    """A connection 1-form of pure bidegree (1, 0) with a stable identifier."""

    id: str
    one_form: MatrixForm

    def __post_init__(self):
        for row in self.one_form.entries:
            for entry in row:
                for key in entry.terms:
                    if len(key) != 1 or not key[0].startswith("x"):
                        raise ValueError(f"connection {self.id!r} has a non-base or non-1-form term {key}")
                if entry.params():
                    raise ValueError(f"connection {self.id!r} depends on parameters")

    @property
    def rank(self) -> int:
        return self.one_form.n

    @property
    def base_dim(self) -> int:
        return self.one_form.m

    @classmethod
    def zero(cls, id: str, n: int, m: int) -> "Connection":
        return cls(id, MatrixForm.zeros(n, m))

    @classmethod
    def from_components(cls, id: str, n: int, m: int, components) -> "Connection":
        """``components`` maps ``'x<alpha>'`` to an n x n array of Scalars or rationals."""
        return cls(id, MatrixForm.from_components(n, m, components))

    def component(self, alpha: int) -> list[list[Scalar]]:
        """The matrix of dx_alpha coefficients."""
        name = f"x{alpha}"
        return [[e.coefficient(name) for e in row] for row in self.one_form.entries]


@dataclass(frozen=True)
class InvariantPolynomial:
    """P(X) = prod_i tr(X^{p_i})."""

    factors: tuple[int, ...]

    def __init__(self, factors):
        factors = tuple(int(f) for f in factors)
        if not factors or any(f < 1 for f in factors):
            raise ValueError(f"factors must be positive integers, got {factors}")
        object.__setattr__(self, "factors", factors)

    @property
    def degree(self) -> int:
        return sum(self.factors)

    def __str__(self):
        return "*".join(f"tr(X^{k})" if k > 1 else "tr(X)" for k in self.factors)


@dataclass(frozen=True)
class GaugeTransform:
    """Parameter-free gauge transformation with its exact inverse."""

    g: tuple[tuple[Scalar, ...], ...]
    g_inv: tuple[tuple[Scalar, ...], ...]
    _mats: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        g = tuple(tuple(row) for row in self.g)
        gi = tuple(tuple(row) for row in self.g_inv)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "g_inv", gi)
        n = len(g)
        if n == 0 or any(len(r) != n for r in g) or len(gi) != n or any(len(r) != n for r in gi):
            raise ValueError("gauge matrices must be square and of equal size")
        m = g[0][0].m
        for row in g + gi:
            for x in row:
                if x.params():
                    raise ValueError("gauge transformations must not depend on parameters")
        for i in range(n):
            for j in range(n):
                acc = Scalar.zero(m)
                for k in range(n):
                    acc = acc + g[i][k] * gi[k][j]
                if acc != Scalar.const(m, 1 if i == j else 0):
                    raise ValueError("g * g_inv is not the identity: g is not invertible with the given inverse")
        object.__setattr__(self, "_mats", (MatrixForm.from_scalars(g), MatrixForm.from_scalars(gi)))

    @property
    def matrix(self) -> MatrixForm:
        return self._mats[0]

    @property
    def inverse(self) -> MatrixForm:
        return self._mats[1]

    def is_constant(self) -> bool:
        return all(x.is_constant() for row in self.g for x in row)


def curvature(a: MatrixForm) -> MatrixForm:
    """dA + A ^ A for a matrix 1-form A."""
    degs = a.degrees()
    if degs and degs != {1}:
        raise ValueError(f"curvature needs a 1-form, got degrees {sorted(degs)}")
    return a.exterior_d() + matrix_wedge(a, a)


def is_flat(d: Connection) -> bool:
    return curvature(d.one_form).is_zero()


def _prune(f: Form, require: frozenset, slack: int) -> Form:
    """Drop terms that cannot collect every required direction with ``slack`` more."""
    need = len(require)
    return Form(f.m, {k: c for k, c in f.items() if len(require.intersection(k)) + slack >= need})


def _trace_power(omega: MatrixForm, k: int, require: frozenset = frozenset(), cap: int = 0, later: int = 0) -> Form:
    """tr(omega^k); with ``require`` only terms able to reach it survive.

    ``cap`` bounds the required directions one factor can add and ``later``
    counts the factors still to be wedged on after this trace.
    """
    acc = omega
    for step in range(1, k - 1):
        acc = matrix_wedge(acc, omega)
        if require:
            acc = acc.map(lambda f, rest=(k - step - 1 + later) * cap: _prune(f, require, rest))
    if k == 1:
        return omega.trace()
    # only the diagonal of the last product is needed
    out = Form(omega.m)
    for i in range(omega.n):
        for j in range(omega.n):
            x, y = acc.entries[i][j], omega.entries[j][i]
            if not x.is_zero() and not y.is_zero():
                out = out + wedge(x, y)
    return _prune(out, require, later * cap) if require else out


def chern_weil(p: InvariantPolynomial, omega: MatrixForm, require=None) -> Form:
    """P(Omega) = prod_i tr(Omega^{p_i}).

    ``require`` (a set of direction names) restricts the result to the terms
    containing all of them; the expansion is pruned as it goes.
    """
    req = frozenset(require or ())
    cap = 0
    if req:
        cap = max((len(req.intersection(k)) for row in omega.entries for e in row for k, _ in e.items()), default=0)
    out = Form.const(omega.m, 1)
    cache: dict[int, Form] = {}
    remaining = p.degree
    for k in p.factors:
        remaining -= k
        if req:
            factor = _trace_power(omega, k, req, cap, remaining)
        else:
            if k not in cache:
                cache[k] = _trace_power(omega, k)
            factor = cache[k]
        out = wedge(out, factor)
        if req:
            out = _prune(out, req, remaining * cap)
    return out


def polarization(p: InvariantPolynomial, args: Sequence[MatrixForm]) -> Form:
    """Full symmetrization of P over its p argument slots.

    Arguments are wedged in slot order inside each trace; at most one argument
    may have odd degree, so no Koszul signs arise.
    """
    deg = p.degree
    if len(args) != deg:
        raise ValueError(f"{p} takes {deg} arguments, got {len(args)}")
    if deg > MAX_POLARIZATION_DEGREE:
        raise ValueError(f"polarization limited to degree <= {MAX_POLARIZATION_DEGREE}")
    m = args[0].m
    # identical objects share a label so repeated arguments are expanded once
    labels = []
    for a in args:
        for i, b in enumerate(args):
            if a is b:
                labels.append(i)
                break
    counts = Counter(itertools.permutations(labels))
    out = Form(m)
    for order, mult in counts.items():
        pos = 0
        prod = Form.const(m, 1)
        for k in p.factors:
            block = args[order[pos]]
            for idx in order[pos + 1: pos + k]:
                block = matrix_wedge(block, args[idx])
            pos += k
            prod = wedge(prod, block.trace())
        out = out + prod * Fraction(mult, math.factorial(deg))
    return out


def straight_line(a0: MatrixForm, a1: MatrixForm, var: str = "s") -> MatrixForm:
    """(1 - var) * a0 + var * a1."""
    sv = Scalar.param(a0.m, var)
    return a0 + (a1 - a0) * sv


def transgression(p: InvariantPolynomial, d0: Connection, d1: Connection) -> Form:
    """p * int_0^1 P(dA/ds, Omega_s, ..., Omega_s) ds along A_s = (1-s) D0 + s D1.

    Omega_s is the curvature along the base only; the result satisfies
    d(result) = P(Omega_1) - P(Omega_0).
    """
    if d0.rank != d1.rank or d0.base_dim != d1.base_dim:
        raise ValueError("connections must share rank and base dimension")
    a_s = straight_line(d0.one_form, d1.one_form)
    omega_s = curvature(a_s).bidegree_component(2, 0)
    velocity = d1.one_form - d0.one_form
    args = [velocity] + [omega_s] * (p.degree - 1)
    integrand = polarization(p, args) * p.degree
    return integrand.map_coefficients(lambda c: c.integrate_params(interval_vars=("s",)))


def gauge_apply(d: Connection, g: GaugeTransform, new_id: str | None = None) -> Connection:
    """D -> g^-1 dg + g^-1 D g."""
    if g.matrix.n != d.rank:
        raise ValueError("gauge transform rank does not match the connection")
    gi, gm = g.inverse, g.matrix
    one_form = matrix_wedge(gi, gm.exterior_d()) + matrix_wedge(matrix_wedge(gi, d.one_form), gm)
    return Connection(new_id or f"{d.id}^g", one_form)


def gauge_apply_curvature(omega: MatrixForm, g: GaugeTransform) -> MatrixForm:
    """Omega -> g^-1 Omega g."""
    return matrix_wedge(matrix_wedge(g.inverse, omega), g.matrix)
