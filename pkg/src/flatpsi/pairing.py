"""Exact pairings of psi with coordinate subtorus cycles, reduced mod Z."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .chernweil import Connection, InvariantPolynomial
from .families import Chain
from .fiber import psi_integrand, simplex_vars, validate_psi_inputs
from .forms import Form
from .scalars import TAU, Scalar, quarter_trig

MOD_TOL = 1e-8


@dataclass(frozen=True)
class BaseCycle:
    """The subtorus {x_j = offset_j for j not in directions}, with multiplicity.

    ``directions`` are 1-based and strictly increasing.  Missing offsets are 0.
    """

    directions: tuple[int, ...]
    offsets: tuple[tuple[int, Fraction | float], ...] = ()
    multiplicity: int = 1

    def __init__(self, directions, offsets: Mapping[int, object] | None = None, multiplicity: int = 1):
        directions = tuple(int(d) for d in directions)
        if any(b <= a for a, b in zip(directions, directions[1:])):
            raise ValueError(f"cycle directions {directions} must be strictly increasing")
        if any(d < 1 for d in directions):
            raise ValueError("cycle directions are 1-based")
        offs = {}
        for a, v in (offsets or {}).items():
            a = int(a)
            if a in directions:
                raise ValueError(f"offset given for cycle direction x{a}")
            if not isinstance(v, float):
                v = Fraction(v)
            if not 0 <= v < 1:
                raise ValueError(f"offset for x{a} must lie in [0, 1), got {v}")
            offs[a] = v
        object.__setattr__(self, "directions", directions)
        object.__setattr__(self, "offsets", tuple(sorted(offs.items())))
        object.__setattr__(self, "multiplicity", int(multiplicity))

    @property
    def dim(self) -> int:
        return len(self.directions)

    def full_offsets(self, m: int) -> dict[int, Fraction | float]:
        if self.directions and self.directions[-1] > m:
            raise ValueError(f"cycle direction x{self.directions[-1]} outside base dimension {m}")
        given = dict(self.offsets)
        return {a: given.get(a, Fraction(0)) for a in range(1, m + 1) if a not in self.directions}

    def is_exact(self, m: int) -> bool:
        """Offsets at which trig values are rational, so the pairing stays exact."""
        return all(isinstance(v, Fraction) and quarter_trig(v) is not None for v in self.full_offsets(m).values())

    def dirs(self) -> tuple[str, ...]:
        return tuple(f"x{a}" for a in self.directions)

    def __str__(self):
        body = "T(" + ",".join(self.dirs()) + ")"
        if self.offsets:
            body += "@" + ",".join(f"x{a}={v}" for a, v in self.offsets)
        return body if self.multiplicity == 1 else f"{self.multiplicity}*{body}"


def _float_tau(exact: Mapping[int, Fraction]) -> float:
    return math.fsum(float(c) * TAU**j for j, c in exact.items())


@dataclass(frozen=True)
class RZValue:
    """A real number kept as an exact polynomial in tau when possible.

    ``exact`` maps tau powers to rationals; it is ``None`` when the value was
    only available in floating point.
    """

    exact: dict | None
    value: float = field(default=0.0)

    @classmethod
    def from_exact(cls, poly: Mapping[int, Fraction]) -> "RZValue":
        poly = {int(j): Fraction(c) for j, c in poly.items() if c != 0}
        return cls(poly, _float_tau(poly))

    @classmethod
    def from_float(cls, value: float) -> "RZValue":
        return cls(None, float(value))

    @classmethod
    def zero(cls) -> "RZValue":
        return cls.from_exact({})

    @property
    def mod_one(self) -> float:
        if self.is_rational():
            q = self.rational()
            return float(q - math.floor(q))
        r = self.value - math.floor(self.value)
        return 0.0 if r == 1.0 else r

    def is_rational(self) -> bool:
        return self.exact is not None and set(self.exact) <= {0}

    def rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError("value is not a tau-free rational")
        return self.exact.get(0, Fraction(0))

    def is_integer(self, tol: float = MOD_TOL) -> bool:
        if self.is_rational():
            return self.rational().denominator == 1
        return abs(self.value - round(self.value)) <= tol

    def equal_mod_one(self, other: "RZValue", tol: float = MOD_TOL) -> bool:
        return (self - other).is_integer(tol)

    def __add__(self, other: "RZValue") -> "RZValue":
        if self.exact is not None and other.exact is not None:
            poly = dict(self.exact)
            for j, c in other.exact.items():
                poly[j] = poly.get(j, 0) + c
            return RZValue.from_exact(poly)
        return RZValue.from_float(self.value + other.value)

    def __neg__(self):
        if self.exact is None:
            return RZValue.from_float(-self.value)
        return RZValue.from_exact({j: -c for j, c in self.exact.items()})

    def __sub__(self, other: "RZValue") -> "RZValue":
        return self + (-other)

    def __mul__(self, k: int) -> "RZValue":
        if self.exact is None:
            return RZValue.from_float(self.value * k)
        return RZValue.from_exact({j: c * k for j, c in self.exact.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, RZValue):
            return NotImplemented
        if self.exact is not None and other.exact is not None:
            return self.exact == other.exact
        return self.value == other.value

    def __hash__(self):
        return hash(tuple(sorted(self.exact.items())) if self.exact is not None else self.value)

    def exact_str(self) -> str | None:
        if self.exact is None:
            return None
        if not self.exact:
            return "0"
        parts = []
        for j in sorted(self.exact):
            c = self.exact[j]
            parts.append(str(c) if j == 0 else f"{c}*tau" + (f"^{j}" if j > 1 else ""))
        return " + ".join(parts)


def _scalar_to_value(c: Scalar, offsets: Mapping[int, object], exact: bool) -> RZValue:
    """Value of a Scalar already integrated over the cycle directions."""
    if exact:
        c = c.restrict_base(offsets)
        poly: dict[int, Fraction] = {}
        for (freq, phase, mono, tau), v in c.items():
            if any(freq) or mono:
                raise ValueError("pairing left a non-constant coefficient")
            poly[tau] = poly.get(tau, 0) + v
        return RZValue.from_exact(poly)
    m = c.m
    x = [float(offsets.get(a, 0.0)) for a in range(1, m + 1)]
    if c.params():
        raise ValueError("pairing left parameters in the coefficient")
    return RZValue.from_float(float(c.evaluate(x)))


def pair(form: Form, cycle: BaseCycle) -> RZValue:
    """Integral of a base form over a coordinate subtorus."""
    if form.params():
        raise ValueError(f"pair needs a form on the base; parameters {sorted(form.params())} remain")
    degs = form.degrees()
    if degs and degs != {cycle.dim}:
        raise ValueError(f"form degrees {sorted(degs)} do not match the cycle dimension {cycle.dim}")
    offsets = cycle.full_offsets(form.m)
    coeff = form.coefficient(*cycle.dirs()).integrate_torus(cycle.directions)
    return _scalar_to_value(coeff, offsets, cycle.is_exact(form.m)) * cycle.multiplicity


def pair_total(chain: Chain, reference: Connection, p: InvariantPolynomial, cycle: BaseCycle,
               connections: Mapping[str, Connection], validate: bool = True) -> RZValue:
    """(-1)^(r+1) times the integral over cycle x chain x I of P(Omega of D~), as one integral.

    The coefficient of dx_C ^ dt_1 .. dt_r ^ ds is read off the integrand and
    integrated over all directions at once.  ``validate=False`` skips the
    cycle and flatness preconditions (the identity with ``pair(psi)`` does not
    need them).
    """
    r = chain.dim
    m = reference.base_dim
    k = 2 * p.degree - r - 1
    if k < 0:
        # P(Omega) has degree 2p < r + 1, below the fiber dimension: nothing survives
        if validate:
            validate_psi_inputs(chain, reference, connections)
        return RZValue.zero()
    if k != cycle.dim:
        raise ValueError(f"cycle dimension {cycle.dim} differs from the psi degree {2 * p.degree - r - 1}")
    if validate:
        validate_psi_inputs(chain, reference, connections)
    tv = simplex_vars(r)
    key = cycle.dirs() + tv + ("s",)
    total = Scalar.zero(m)
    for simplex, coeff in chain.items():
        integrand = psi_integrand(simplex, reference, p, connections, strict=False, extra=cycle.dirs())
        c = integrand.coefficient(*key).integrate_params(tv, ("s",))
        total = total + c * coeff
    total = total.integrate_torus(cycle.directions) * (-1) ** (r + 1)
    return _scalar_to_value(total, cycle.full_offsets(m), cycle.is_exact(m)) * cycle.multiplicity


def closedness_check(form: Form) -> bool:
    if form.params():
        raise ValueError("closedness_check expects a form on the base")
    return form.exterior_d().is_zero()


def subtorus_cycles(m: int, k: int) -> list[BaseCycle]:
    """All coordinate k-subtori of T^m at offset 0."""
    from itertools import combinations

    return [BaseCycle(c) for c in combinations(range(1, m + 1), k)]
