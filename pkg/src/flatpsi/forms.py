"""Differential forms on B x P with exact Scalar coefficients.

Directions are named ``x1..xm`` (base torus), ``t1..tr`` (simplex) and ``s``
(interval).  A term key is the tuple of its directions in the fixed order
x-block, t-block, s, so every stored term reads ``coeff * dx_I ^ dt_J [^ ds]``
with the base block first.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .scalars import Scalar, base_index, param_key


def dir_key(name: str) -> tuple[int, int]:
    alpha = base_index(name)
    if alpha is not None:
        return (0, alpha)
    return param_key(name)


def _sort_with_sign(dirs: Sequence[str]) -> tuple[int, tuple[str, ...]]:
    """Sort directions canonically; sign 0 if a direction repeats."""
    keys = [dir_key(d) for d in dirs]
    if len(set(keys)) != len(keys):
        return 0, ()
    inversions = sum(1 for i in range(len(keys)) for j in range(i + 1, len(keys)) if keys[i] > keys[j])
    order = sorted(range(len(dirs)), key=lambda i: keys[i])
    return (-1) ** inversions, tuple(dirs[i] for i in order)


def _merge_sign(a: tuple[str, ...], b: tuple[str, ...]) -> tuple[int, tuple[str, ...]]:
    if not a:
        return 1, b
    if not b:
        return 1, a
    ka = [dir_key(d) for d in a]
    kb = [dir_key(d) for d in b]
    if set(ka) & set(kb):
        return 0, ()
    inv = 0
    j = 0
    # count pairs (x in a, y in b) with x > y; both blocks sorted
    for x in ka:
        while j < len(kb) and kb[j] < x:
            j += 1
        inv += j
    merged = tuple(sorted(a + b, key=dir_key))
    return (-1) ** inv, merged


def bidegree_of(key: tuple[str, ...]) -> tuple[int, int]:
    a = sum(1 for d in key if base_index(d) is not None)
    return a, len(key) - a


class Form:
    """Finite sum of ``Scalar * dx_I ^ dt_J`` terms.  Immutable."""

    __slots__ = ("m", "_terms")

    def __init__(self, m: int, terms: Mapping[tuple[str, ...], Scalar] | None = None):
        self.m = m
        self._terms = {k: v for k, v in (terms or {}).items() if not v.is_zero()}

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, m: int) -> "Form":
        return cls(m)

    @classmethod
    def scalar(cls, s: Scalar) -> "Form":
        return cls(s.m, {(): s})

    @classmethod
    def const(cls, m: int, value=1) -> "Form":
        return cls.scalar(Scalar.const(m, value))

    @classmethod
    def d(cls, m: int, *dirs: str, coeff: Scalar | int | Fraction = 1) -> "Form":
        """``coeff * d<dirs[0]> ^ d<dirs[1]> ^ ...`` (sorted with sign)."""
        for name in dirs:
            _check_dir(name, m)
        if not isinstance(coeff, Scalar):
            coeff = Scalar.const(m, coeff)
        sign, key = _sort_with_sign(dirs)
        if sign == 0:
            return cls(m)
        return cls(m, {key: coeff * sign})

    # -- protocol ---------------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coefficient(self, *dirs: str) -> Scalar:
        sign, key = _sort_with_sign(dirs)
        if sign == 0:
            return Scalar.zero(self.m)
        return self._terms.get(key, Scalar.zero(self.m)) * sign

    def is_zero(self) -> bool:
        return not self._terms

    def degrees(self) -> set[int]:
        return {len(k) for k in self._terms}

    def degree(self) -> int:
        """Degree of a homogeneous nonzero form."""
        degs = self.degrees()
        if len(degs) != 1:
            raise ValueError(f"form is not homogeneous (degrees {sorted(degs)})")
        return degs.pop()

    def params(self) -> set[str]:
        out = set()
        for key, c in self._terms.items():
            out |= {d for d in key if base_index(d) is None}
            out |= c.params()
        return out

    def _check(self, other: "Form"):
        if other.m != self.m:
            raise ValueError(f"base dimension mismatch: {self.m} vs {other.m}")

    def __eq__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        return self.m == other.m and self._terms == other._terms

    def __hash__(self):
        return hash((self.m, frozenset(self._terms.items())))

    def __add__(self, other: "Form") -> "Form":
        self._check(other)
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out[k] + v if k in out else v
        return Form(self.m, out)

    def __neg__(self):
        return Form(self.m, {k: -v for k, v in self._terms.items()})

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def __mul__(self, c) -> "Form":
        """Multiply by a 0-form coefficient (Scalar or rational)."""
        return Form(self.m, {k: v * c for k, v in self._terms.items()})

    __rmul__ = __mul__

    def __xor__(self, other: "Form") -> "Form":
        return wedge(self, other)

    def __repr__(self):
        return f"Form({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for key in sorted(self._terms, key=lambda k: (len(k), [dir_key(d) for d in k])):
            basis = "^".join("d" + d for d in key) or "1"
            parts.append(f"({self._terms[key]}) {basis}")
        return " + ".join(parts)

    # -- structure --------------------------------------------------------
    def bidegree_component(self, a: int, b: int) -> "Form":
        return Form(self.m, {k: v for k, v in self._terms.items() if bidegree_of(k) == (a, b)})

    def homogeneous_component(self, k: int) -> "Form":
        return Form(self.m, {key: v for key, v in self._terms.items() if len(key) == k})

    def map_coefficients(self, fn: Callable[[Scalar], Scalar]) -> "Form":
        return Form(self.m, {k: fn(v) for k, v in self._terms.items()})

    def exterior_d(self) -> "Form":
        out: dict = {}
        base_dirs = [f"x{a}" for a in range(1, self.m + 1)]
        for key, c in self._terms.items():
            for v in base_dirs + sorted(c.params(), key=param_key):
                if v in key:
                    continue
                dc = c.partial(v)
                if dc.is_zero():
                    continue
                kv = dir_key(v)
                sign = (-1) ** sum(1 for d in key if dir_key(d) < kv)
                new_key = tuple(sorted(key + (v,), key=dir_key))
                out[new_key] = out[new_key] + dc * sign if new_key in out else dc * sign
        return Form(self.m, out)

    def substitute_params(self, subs: Mapping[str, Scalar]) -> "Form":
        """Pull back along a parameter map given by simultaneous substitution."""
        out = Form(self.m)
        images = {name: Form.scalar(img).exterior_d() for name, img in subs.items()}
        for key, c in self._terms.items():
            term = Form.scalar(c.substitute(subs))
            for d in key:
                term = wedge(term, images[d] if d in images else Form.d(self.m, d))
            out = out + term
        return out

    def restrict_base(self, offsets: Mapping[int, Fraction]) -> "Form":
        """Pull back to the subtorus {x_alpha = offset_alpha}; dx_alpha -> 0 there."""
        fixed = {f"x{a}" for a in offsets}
        return Form(
            self.m,
            {k: v.restrict_base(offsets) for k, v in self._terms.items() if not fixed & set(k)},
        )


def _check_dir(name: str, m: int):
    alpha = base_index(name)
    if alpha is not None:
        if not 1 <= alpha <= m:
            raise ValueError(f"direction {name!r} outside base dimension {m}")
    else:
        param_key(name)


def wedge(a: Form, b: Form) -> Form:
    a._check(b)
    out: dict = {}
    for ka, ca in a._terms.items():
        for kb, cb in b._terms.items():
            sign, key = _merge_sign(ka, kb)
            if sign == 0:
                continue
            val = ca * cb
            if sign < 0:
                val = -val
            out[key] = out[key] + val if key in out else val
    return Form(a.m, out)


def exterior_d(a: Form) -> Form:
    return a.exterior_d()


def bidegree_component(a: Form, bidegree: tuple[int, int]) -> Form:
    return a.bidegree_component(*bidegree)


class MatrixForm:
    """Dense n x n array of Forms (connections, curvatures, gauge matrices)."""

    __slots__ = ("n", "m", "entries")

    def __init__(self, entries: Sequence[Sequence[Form]]):
        n = len(entries)
        if n == 0 or any(len(row) != n for row in entries):
            raise ValueError("MatrixForm needs a non-empty square array")
        m = entries[0][0].m
        if any(e.m != m for row in entries for e in row):
            raise ValueError("entries disagree on base dimension")
        self.n = n
        self.m = m
        self.entries = tuple(tuple(row) for row in entries)

    @classmethod
    def zeros(cls, n: int, m: int) -> "MatrixForm":
        return cls([[Form(m) for _ in range(n)] for _ in range(n)])

    @classmethod
    def identity(cls, n: int, m: int) -> "MatrixForm":
        return cls([[Form.const(m, 1 if i == j else 0) for j in range(n)] for i in range(n)])

    @classmethod
    def from_scalars(cls, mat: Sequence[Sequence[Scalar]]) -> "MatrixForm":
        """0-form matrix from a square array of Scalars."""
        return cls([[Form.scalar(x) for x in row] for row in mat])

    @classmethod
    def from_components(cls, n: int, m: int, components: Mapping[str, Sequence[Sequence]]) -> "MatrixForm":
        """Sum_dir M_dir * d(dir) with M_dir an n x n array of Scalars or rationals."""
        out = cls.zeros(n, m)
        for name, mat in components.items():
            entries = [
                [Form.d(m, name, coeff=mat[i][j] if isinstance(mat[i][j], Scalar) else Scalar.const(m, mat[i][j]))
                 for j in range(n)]
                for i in range(n)
            ]
            out = out + cls(entries)
        return out

    def _check(self, other: "MatrixForm"):
        if self.n != other.n:
            raise ValueError(f"rank mismatch: {self.n} vs {other.n}")
        if self.m != other.m:
            raise ValueError(f"base dimension mismatch: {self.m} vs {other.m}")

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other):
        if not isinstance(other, MatrixForm):
            return NotImplemented
        return self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def __add__(self, other: "MatrixForm") -> "MatrixForm":
        self._check(other)
        return MatrixForm([[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.entries, other.entries)])

    def __neg__(self):
        return self.map(lambda f: -f)

    def __sub__(self, other: "MatrixForm") -> "MatrixForm":
        return self + (-other)

    def __mul__(self, c) -> "MatrixForm":
        return self.map(lambda f: f * c)

    __rmul__ = __mul__

    def __xor__(self, other: "MatrixForm") -> "MatrixForm":
        return matrix_wedge(self, other)

    def __repr__(self):
        rows = ["[" + ", ".join(str(e) for e in row) + "]" for row in self.entries]
        return "MatrixForm(" + "; ".join(rows) + ")"

    def map(self, fn: Callable[[Form], Form]) -> "MatrixForm":
        return MatrixForm([[fn(e) for e in row] for row in self.entries])

    def is_zero(self) -> bool:
        return all(e.is_zero() for row in self.entries for e in row)

    def degrees(self) -> set[int]:
        out: set[int] = set()
        for row in self.entries:
            for e in row:
                out |= e.degrees()
        return out

    def bidegree_component(self, a: int, b: int) -> "MatrixForm":
        return self.map(lambda f: f.bidegree_component(a, b))

    def exterior_d(self) -> "MatrixForm":
        return self.map(lambda f: f.exterior_d())

    def trace(self) -> Form:
        out = Form(self.m)
        for i in range(self.n):
            out = out + self.entries[i][i]
        return out

    def transpose(self) -> "MatrixForm":
        return MatrixForm([[self.entries[j][i] for j in range(self.n)] for i in range(self.n)])


def matrix_wedge(a: MatrixForm, b: MatrixForm) -> MatrixForm:
    a._check(b)
    n = a.n
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = Form(a.m)
            for k in range(n):
                x, y = a.entries[i][k], b.entries[k][j]
                if x.is_zero() or y.is_zero():
                    continue
                acc = acc + wedge(x, y)
            row.append(acc)
        rows.append(row)
    return MatrixForm(rows)


def matrix_d(a: MatrixForm) -> MatrixForm:
    return a.exterior_d()


def matrix_trace(a: MatrixForm) -> Form:
    return a.trace()


def wedge_all(forms: Iterable[Form], m: int) -> Form:
    out = Form.const(m, 1)
    for f in forms:
        out = wedge(out, f)
    return out
