"""Exact coefficient ring for form coefficients.

A :class:`Scalar` is a finite sum

    coeff * tau**j * trig(2*pi * k.x) * t1**a1 ... tr**ar * s**b

with rational ``coeff``, ``tau = 2*pi`` kept symbolic, ``trig`` one of cos/sin
and ``k`` an integer frequency vector on the unit-period torus T^m.
"""
from __future__ import annotations

import math
from functools import lru_cache
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping

import numpy as np

TAU = 2 * math.pi

COS = "cos"
SIN = "sin"


def param_key(name: str) -> tuple[int, int]:
    """Sort key for parameter names: t1 < t2 < ... < s."""
    if name == "s":
        return (2, 0)
    if name.startswith("t") and name[1:].isdigit() and int(name[1:]) >= 1:
        return (1, int(name[1:]))
    raise ValueError(f"unknown parameter name {name!r}")


def base_index(name: str) -> int | None:
    """Return alpha for ``'x<alpha>'`` (1-based), else None."""
    if name.startswith("x") and name[1:].isdigit():
        return int(name[1:])
    return None


def canonical_trig(freq: tuple[int, ...], phase: str) -> tuple[int, tuple[int, ...]] | None:
    """Canonical representative of trig(k.x): returns (sign, freq) or None for sin(0)."""
    for k in freq:
        if k != 0:
            if k > 0:
                return 1, freq
            neg = tuple(-v for v in freq)
            return (1 if phase == COS else -1), neg
    if phase == SIN:
        return None
    return 1, freq


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"not an exact rational: {value!r}")


def quarter_trig(theta: Fraction) -> tuple[int, int] | None:
    """Exact (cos, sin) of 2*pi*theta when 4*theta is an integer."""
    q = theta * 4
    if q.denominator != 1:
        return None
    return [(1, 0), (0, 1), (-1, 0), (0, -1)][q.numerator % 4]


@lru_cache(maxsize=65536)
def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for name, e in b:
        exps[name] = exps.get(name, 0) + e
    return tuple(sorted(exps.items(), key=lambda kv: param_key(kv[0])))


class Scalar:
    """Element of Q[tau] (x) trig polynomials on T^m (x) Q[t1..tr, s].

    Terms are stored as ``{(freq, phase, monomial, tau_pow): Fraction}`` with
    canonical keys and no zero coefficients.  Instances are immutable.
    """

    __slots__ = ("m", "_terms", "_hash")

    def __init__(self, m: int, terms: Mapping | None = None):
        self.m = m
        self._terms = {k: v for k, v in (terms or {}).items() if v != 0}
        self._hash = None

    # -- constructors -----------------------------------------------------
    @classmethod
    def const(cls, m: int, value=1) -> "Scalar":
        return cls(m, {((0,) * m, COS, (), 0): _as_fraction(value)})

    @classmethod
    def zero(cls, m: int) -> "Scalar":
        return cls(m)

    @classmethod
    def param(cls, m: int, name: str, power: int = 1) -> "Scalar":
        param_key(name)
        mono = ((name, power),) if power else ()
        return cls(m, {((0,) * m, COS, mono, 0): Fraction(1)})

    @classmethod
    def trig(cls, m: int, freq: Iterable[int], phase: str = COS, coeff=1, tau_pow: int = 0) -> "Scalar":
        freq = tuple(int(k) for k in freq)
        if len(freq) != m:
            raise ValueError(f"frequency vector {freq} does not have length {m}")
        if phase not in (COS, SIN):
            raise ValueError(f"phase must be 'cos' or 'sin', got {phase!r}")
        canon = canonical_trig(freq, phase)
        if canon is None:
            return cls(m)
        sign, freq = canon
        return cls(m, {(freq, phase, (), int(tau_pow)): sign * _as_fraction(coeff)})

    @classmethod
    def tau(cls, m: int, power: int = 1) -> "Scalar":
        return cls(m, {((0,) * m, COS, (), power): Fraction(1)})

    @classmethod
    def barycentric_t0(cls, m: int, r: int) -> "Scalar":
        """t0 = 1 - t1 - ... - tr."""
        out = cls.const(m, 1)
        for j in range(1, r + 1):
            out = out - cls.param(m, f"t{j}")
        return out

    # -- basic protocol ---------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        zero = (0,) * self.m
        return all(k[0] == zero and not k[2] and k[3] == 0 for k in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("scalar is not a rational constant")
        return sum(self._terms.values(), Fraction(0))

    def params(self) -> set[str]:
        return {name for k in self._terms for name, _ in k[2]}

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Scalar.const(self.m, other)
        if not isinstance(other, Scalar):
            return NotImplemented
        return self.m == other.m and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.m, frozenset(self._terms.items())))
        return self._hash

    def _coerce(self, other) -> "Scalar":
        if isinstance(other, Scalar):
            if other.m != self.m:
                raise ValueError(f"base dimension mismatch: {self.m} vs {other.m}")
            return other
        return Scalar.const(self.m, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out.get(k, 0) + v
        return Scalar(self.m, out)

    __radd__ = __add__

    def __neg__(self):
        return Scalar(self.m, {k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Scalar(self.m, {k: v * other for k, v in self._terms.items()})
        other = self._coerce(other)
        out: dict = {}
        for (fa, pa, ma, ja), ca in self._terms.items():
            for (fb, pb, mb, jb), cb in other._terms.items():
                mono = _mono_mul(ma, mb)
                tau = ja + jb
                c = ca * cb
                for w, freq, phase in _trig_product(fa, pa, fb, pb):
                    key = (freq, phase, mono, tau)
                    out[key] = out.get(key, 0) + (c if w == 1 else w * c)
        return Scalar(self.m, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not supported")
        out = Scalar.const(self.m, 1)
        for _ in range(n):
            out = out * self
        return out

    def __repr__(self):
        return f"Scalar({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for (freq, phase, mono, tau), c in sorted(self._terms.items(), key=_term_sort_key):
            fac = [str(c)]
            if tau:
                fac.append("tau" if tau == 1 else f"tau^{tau}")
            if any(freq):
                arg = "+".join(f"{k}*x{i + 1}" for i, k in enumerate(freq) if k)
                fac.append(f"{phase}(2pi({arg}))")
            for name, e in mono:
                fac.append(name if e == 1 else f"{name}^{e}")
            parts.append("*".join(fac))
        return " + ".join(parts)

    # -- calculus ---------------------------------------------------------
    def partial(self, direction: str) -> "Scalar":
        """Exact partial derivative along ``x<alpha>``, ``t<k>`` or ``s``."""
        alpha = base_index(direction)
        out: dict = {}
        if alpha is not None:
            if not 1 <= alpha <= self.m:
                raise ValueError(f"unknown direction {direction!r} for base dimension {self.m}")
            i = alpha - 1
            for (freq, phase, mono, tau), c in self._terms.items():
                k = freq[i]
                if k == 0:
                    continue
                if phase == COS:
                    key, val = (freq, SIN, mono, tau + 1), -k * c
                else:
                    key, val = (freq, COS, mono, tau + 1), k * c
                out[key] = out.get(key, 0) + val
            return Scalar(self.m, out)
        param_key(direction)
        for (freq, phase, mono, tau), c in self._terms.items():
            exps = dict(mono)
            e = exps.get(direction, 0)
            if e == 0:
                continue
            if e == 1:
                del exps[direction]
            else:
                exps[direction] = e - 1
            new_mono = tuple(sorted(exps.items(), key=lambda kv: param_key(kv[0])))
            key = (freq, phase, new_mono, tau)
            out[key] = out.get(key, 0) + e * c
        return Scalar(self.m, out)

    def integrate_torus(self, dirs: Iterable[int]) -> "Scalar":
        """Integrate over the unit-period circle in each base direction (1-based)."""
        idx = [a - 1 for a in dirs]
        for i in idx:
            if not 0 <= i < self.m:
                raise ValueError(f"direction x{i + 1} outside base dimension {self.m}")
        return Scalar(self.m, {k: v for k, v in self._terms.items() if all(k[0][i] == 0 for i in idx)})

    def integrate_params(self, simplex_vars: Iterable[str] = (), interval_vars: Iterable[str] = ()) -> "Scalar":
        """Integrate exactly over the simplex in ``simplex_vars`` times [0,1] per interval var."""
        from .fiber import simplex_moment

        simplex_vars = tuple(simplex_vars)
        interval_vars = tuple(interval_vars)
        out: dict = {}
        for (freq, phase, mono, tau), c in self._terms.items():
            exps = dict(mono)
            alpha = [0] + [exps.pop(v, 0) for v in simplex_vars]
            weight = simplex_moment(alpha) if simplex_vars else Fraction(1)
            for v in interval_vars:
                weight /= exps.pop(v, 0) + 1
            new_mono = tuple(sorted(exps.items(), key=lambda kv: param_key(kv[0])))
            key = (freq, phase, new_mono, tau)
            out[key] = out.get(key, 0) + c * weight
        return Scalar(self.m, out)

    def substitute(self, subs: Mapping[str, "Scalar"]) -> "Scalar":
        """Simultaneous substitution of parameters by Scalars (no trig in the images)."""
        if not subs:
            return self
        out = Scalar(self.m)
        cache: dict = {}
        for (freq, phase, mono, tau), c in self._terms.items():
            keep = tuple((n, e) for n, e in mono if n not in subs)
            term = Scalar(self.m, {(freq, phase, keep, tau): c})
            for n, e in mono:
                if n in subs:
                    if (n, e) not in cache:
                        cache[(n, e)] = self._coerce(subs[n]) ** e
                    term = term * cache[(n, e)]
            out = out + term
        return out

    def restrict_base(self, offsets: Mapping[int, Fraction]) -> "Scalar":
        """Fix x_alpha = offset exactly; offsets must be multiples of 1/4."""
        if not offsets:
            return self
        out: dict = {}
        for (freq, phase, mono, tau), c in self._terms.items():
            theta = sum((freq[a - 1] * _as_fraction(o) for a, o in offsets.items()), Fraction(0))
            cs = quarter_trig(theta)
            if cs is None:
                raise ValueError(f"offsets {dict(offsets)} give irrational trig values")
            cos_t, sin_t = cs
            rest = tuple(0 if (i + 1) in offsets else k for i, k in enumerate(freq))
            # trig(a + theta) with a the remaining phase
            if phase == COS:
                pieces = [(cos_t, COS), (-sin_t, SIN)]
            else:
                pieces = [(cos_t, SIN), (sin_t, COS)]
            for w, ph in pieces:
                if w == 0:
                    continue
                canon = canonical_trig(rest, ph)
                if canon is None:
                    continue
                sign, f = canon
                key = (f, ph, mono, tau)
                out[key] = out.get(key, 0) + sign * w * c
        return Scalar(self.m, out)

    # -- evaluation -------------------------------------------------------
    def evaluate(self, x, params: Mapping[str, float] | None = None):
        """Float evaluation; ``x`` has trailing axis of length m (numpy broadcast)."""
        x = np.asarray(x, dtype=float)
        params = params or {}
        total = 0.0
        for (freq, phase, mono, tau), c in self._terms.items():
            val = float(c) * TAU**tau
            if any(freq):
                arg = TAU * (x @ np.asarray(freq, dtype=float))
                val = val * (np.cos(arg) if phase == COS else np.sin(arg))
            for name, e in mono:
                val = val * np.asarray(params[name], dtype=float) ** e
            total = total + val
        return total

    def tau_float(self) -> float:
        """Float value of a trig- and parameter-free Scalar."""
        if any(any(k[0]) or k[2] for k in self._terms):
            raise ValueError("scalar depends on x or parameters")
        return float(sum(float(c) * TAU**k[3] for k, c in self._terms.items()))

    def tau_free(self) -> bool:
        return all(k[3] == 0 for k in self._terms)


def _term_sort_key(item):
    (freq, phase, mono, tau), _ = item
    return (tau, freq, phase, tuple((param_key(n), e) for n, e in mono))


@lru_cache(maxsize=65536)
def _trig_product(fa, pa, fb, pb):
    """Product-to-sum for trig(fa) * trig(fb) as ((weight, freq, phase), ...), canonical."""
    if not any(fa):
        return ((1, fb, pb),)
    if not any(fb):
        return ((1, fa, pa),)
    fs = tuple(a + b for a, b in zip(fa, fb))
    fd = tuple(a - b for a, b in zip(fa, fb))
    half = Fraction(1, 2)
    if pa == COS and pb == COS:
        raw = [(half, fd, COS), (half, fs, COS)]
    elif pa == SIN and pb == SIN:
        raw = [(half, fd, COS), (-half, fs, COS)]
    elif pa == SIN and pb == COS:
        raw = [(half, fs, SIN), (half, fd, SIN)]
    else:
        raw = [(half, fs, SIN), (-half, fd, SIN)]
    out = []
    for w, f, ph in raw:
        canon = canonical_trig(f, ph)
        if canon is None:
            continue
        sign, f = canon
        out.append((sign * w, f, ph))
    return tuple(out)


def scalar_add(a: Scalar, b: Scalar) -> Scalar:
    return a + b


def scalar_mul(a: Scalar, b: Scalar) -> Scalar:
    return a * b


def scalar_partial(a: Scalar, direction: str) -> Scalar:
    return a.partial(direction)


def scalar_integrate_torus(a: Scalar, dirs: Iterable[int]) -> Scalar:
    return a.integrate_torus(dirs)
