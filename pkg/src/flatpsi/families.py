"""Simplicial abelian group of relatively flat connection tuples."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .chernweil import Connection, curvature, is_flat
from .forms import MatrixForm
from .scalars import Scalar


class FlatnessError(ValueError):
    pass


class NotACycleError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Simplex:
    vertices: tuple[str, ...]

    def __init__(self, vertices: Iterable[str]):
        vertices = tuple(vertices)
        if not vertices:
            raise ValueError("a simplex needs at least one vertex")
        object.__setattr__(self, "vertices", vertices)

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1

    def __str__(self):
        return "(" + ",".join(self.vertices) + ")"


class Chain:
    """Z-linear combination of simplices of a fixed dimension."""

    __slots__ = ("dim", "_terms")

    def __init__(self, terms: Mapping[Simplex, int] | Iterable[tuple[Simplex, int]] = (), dim: int | None = None):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Simplex, int] = {}
        for simplex, c in items:
            if not isinstance(simplex, Simplex):
                simplex = Simplex(simplex)
            if dim is None:
                dim = simplex.dim
            elif simplex.dim != dim:
                raise ValueError(f"chain mixes dimensions {dim} and {simplex.dim}")
            acc[simplex] = acc.get(simplex, 0) + int(c)
        self._terms = {s: c for s, c in acc.items() if c != 0}
        self.dim = dim if dim is not None else 0

    @classmethod
    def of(cls, *vertices: str, coeff: int = 1) -> "Chain":
        return cls({Simplex(vertices): coeff})

    @property
    def terms(self) -> dict[Simplex, int]:
        return dict(self._terms)

    def items(self):
        return sorted(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other):
        if not isinstance(other, Chain):
            return NotImplemented
        if self.is_zero() and other.is_zero():
            return True
        return self.dim == other.dim and self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __add__(self, other: "Chain") -> "Chain":
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        return Chain(list(self._terms.items()) + list(other._terms.items()))

    def __neg__(self):
        return Chain({s: -c for s, c in self._terms.items()}, dim=self.dim)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, k: int):
        return Chain({s: c * k for s, c in self._terms.items()}, dim=self.dim)

    __rmul__ = __mul__

    def __repr__(self):
        if not self._terms:
            return "Chain(0)"
        return "Chain(" + " + ".join(f"{c}*{s}" for s, c in self.items()) + ")"

    def vertex_ids(self) -> set[str]:
        return {v for s in self._terms for v in s.vertices}


def boundary(c: Chain) -> Chain:
    """Alternating-sum boundary; defined for dimension >= 1."""
    if c.dim < 1:
        raise ValueError("boundary of a 0-chain is not defined")
    out: dict[Simplex, int] = {}
    for s, coeff in c.items():
        for i in range(len(s.vertices)):
            face = Simplex(s.vertices[:i] + s.vertices[i + 1:])
            out[face] = out.get(face, 0) + (-1) ** i * coeff
    return Chain(out, dim=c.dim - 1)


def is_cycle(c: Chain) -> bool:
    if c.dim == 0:
        return c.is_zero()
    return boundary(c).is_zero()


def face_map(phi: Sequence[int], sigma: Simplex) -> Simplex:
    """phi^*(D^0..D^s) = (D^phi(0), ..., D^phi(r)) for strictly increasing phi."""
    phi = tuple(phi)
    if any(b <= a for a, b in zip(phi, phi[1:])):
        raise ValueError(f"face map {phi} is not strictly increasing")
    if phi and (phi[0] < 0 or phi[-1] > sigma.dim):
        raise ValueError(f"face map {phi} leaves [0, {sigma.dim}]")
    return Simplex(sigma.vertices[i] for i in phi)


def _check_compatible(vertices: Sequence[Connection]):
    if not vertices:
        raise ValueError("need at least one connection")
    n, m = vertices[0].rank, vertices[0].base_dim
    for v in vertices:
        if v.rank != n or v.base_dim != m:
            raise ValueError(f"connection {v.id!r} has rank/base ({v.rank},{v.base_dim}), expected ({n},{m})")


def affine_family(vertices: Sequence[Connection]) -> MatrixForm:
    """D^0 + sum_j t_j (D^j - D^0) on B x Delta^r."""
    _check_compatible(vertices)
    d0 = vertices[0].one_form
    out = d0
    for j, v in enumerate(vertices[1:], start=1):
        out = out + (v.one_form - d0) * Scalar.param(d0.m, f"t{j}")
    return out


def relative_flatness_check(vertices: Sequence[Connection]) -> bool:
    """True iff sum_j t_j D^j is flat for every point of the simplex.

    The slice curvature is an exact polynomial in t, so it vanishes on the
    simplex iff every coefficient vanishes.
    """
    family = affine_family(vertices)
    return curvature(family).bidegree_component(2, 0).is_zero()


def relative_flatness_pairwise(vertices: Sequence[Connection]) -> bool:
    """Same predicate via the homogeneous quadratic expansion in (t_0..t_r).

    Flat vertices, and for each pair j < k
    dD^j + dD^k + D^j ^ D^k + D^k ^ D^j = 0.
    """
    _check_compatible(vertices)
    if not all(is_flat(v) for v in vertices):
        return False
    for j in range(len(vertices)):
        for k in range(j + 1, len(vertices)):
            a, b = vertices[j].one_form, vertices[k].one_form
            mixed = a.exterior_d() + b.exterior_d() + (a ^ b) + (b ^ a)
            if not mixed.is_zero():
                return False
    return True


@dataclass
class ChainReport:
    is_cycle: bool
    flatness: dict[Simplex, bool] = field(default_factory=dict)
    missing: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.is_cycle and not self.missing and all(self.flatness.values())


def validate_chain(c: Chain, connections: Mapping[str, Connection]) -> ChainReport:
    missing = sorted(v for v in c.vertex_ids() if v not in connections)
    report = ChainReport(is_cycle=is_cycle(c), missing=missing)
    for s, _ in c.items():
        if any(v in missing for v in s.vertices):
            report.flatness[s] = False
            continue
        report.flatness[s] = relative_flatness_check([connections[v] for v in s.vertices])
    return report


def family_connection(
    sigma: Simplex, connections: Mapping[str, Connection], strict: bool = True
) -> MatrixForm:
    """The affine family of the simplex's vertex connections in coordinates t1..tr."""
    vertices = [connections[v] for v in sigma.vertices]
    if strict and not relative_flatness_check(vertices):
        raise FlatnessError(f"simplex {sigma} is not relatively flat")
    return affine_family(vertices)
