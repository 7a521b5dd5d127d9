"""Fiber integration over simplex x interval fibers; the invariant psi.

Orientation: the total space B x F is oriented by the base followed by the
fiber, so ``int_F (f dx_I ^ vol_F) = (int_F f) dx_I``.  Simplex fibers use the
coordinates t1..tr (t0 = 1 - sum t eliminated) with dt1 ^ ... ^ dtr positive;
the product Delta^r x I puts the simplex block before ds.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence, Union

from .chernweil import Connection, InvariantPolynomial, chern_weil, curvature, is_flat
from .families import Chain, FlatnessError, NotACycleError, Simplex, family_connection, is_cycle, validate_chain
from .forms import Form, MatrixForm, dir_key
from .scalars import Scalar

log = logging.getLogger(__name__)


def simplex_moment(alpha: Sequence[int]) -> Fraction:
    """int_{Delta^r} t0^a0 ... tr^ar dt1..dtr = prod(a_i!) / (r + sum a)!."""
    alpha = [int(a) for a in alpha]
    if not alpha or any(a < 0 for a in alpha):
        raise ValueError(f"exponents must be non-negative, got {alpha}")
    r = len(alpha) - 1
    num = 1
    for a in alpha:
        num *= math.factorial(a)
    return Fraction(num, math.factorial(r + sum(alpha)))


def simplex_vars(r: int) -> tuple[str, ...]:
    return tuple(f"t{j}" for j in range(1, r + 1))


@dataclass(frozen=True)
class FiberSpec:
    """Fiber domain: ``simplex``, ``interval``, ``simplex_interval``, ``chain`` or ``chain_interval``."""

    kind: str
    r: int = 0
    chain: Chain | None = None

    KINDS = ("simplex", "interval", "simplex_interval", "chain", "chain_interval")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown fiber kind {self.kind!r}")
        if self.kind.startswith("chain"):
            if self.chain is None:
                raise ValueError("chain fibers need a chain")
            object.__setattr__(self, "r", self.chain.dim)
        if self.r < 0:
            raise ValueError("negative simplex dimension")

    @classmethod
    def simplex(cls, r: int) -> "FiberSpec":
        return cls("simplex", r)

    @classmethod
    def interval(cls) -> "FiberSpec":
        return cls("interval", 0)

    @classmethod
    def simplex_interval(cls, r: int) -> "FiberSpec":
        return cls("simplex_interval", r)

    @classmethod
    def over_chain(cls, chain: Chain, with_interval: bool = False) -> "FiberSpec":
        return cls("chain_interval" if with_interval else "chain", chain=chain)

    @property
    def has_interval(self) -> bool:
        return self.kind.endswith("interval")

    @property
    def t_vars(self) -> tuple[str, ...]:
        return () if self.kind == "interval" else simplex_vars(self.r)

    @property
    def s_vars(self) -> tuple[str, ...]:
        return ("s",) if self.has_interval else ()

    @property
    def dim(self) -> int:
        return len(self.t_vars) + len(self.s_vars)


def _integrate_block(omega: Form, t_vars: tuple[str, ...], s_vars: tuple[str, ...]) -> Form:
    """Keep terms containing the whole fiber volume, move it rightmost, integrate."""
    fiber = set(t_vars) | set(s_vars)
    out: dict = {}
    for key, c in omega.items():
        if not fiber <= set(key):
            continue
        rest = tuple(d for d in key if d not in fiber)
        # parity of moving the fiber directions past the later non-fiber ones
        inv = sum(1 for i, d in enumerate(key) if d in fiber for e in key[i + 1:] if e not in fiber)
        val = c.integrate_params(t_vars, s_vars)
        if inv % 2:
            val = -val
        out[rest] = out[rest] + val if rest in out else val
    return Form(omega.m, out)


FormSource = Union[Form, Mapping[Simplex, Form], Callable[[Simplex], Form]]


def integrate_fiber(omega: FormSource, fiber: FiberSpec, require_base: bool = False) -> Form:
    """Exact fiber integral; chain fibers take one integrand per simplex."""
    if fiber.kind.startswith("chain"):
        total = None
        for simplex, coeff in fiber.chain.items():
            if isinstance(omega, Form):
                integrand = omega
            elif callable(omega) and not isinstance(omega, Mapping):
                integrand = omega(simplex)
            else:
                integrand = omega[simplex]
            piece = integrate_fiber(integrand, FiberSpec("simplex_interval" if fiber.has_interval else "simplex", fiber.r),
                                    require_base=require_base) * coeff
            total = piece if total is None else total + piece
        if total is None:
            raise ValueError("cannot integrate over the empty chain without a base dimension")
        return total
    degs = omega.degrees()
    if degs and max(degs) < fiber.dim:
        raise ValueError(f"form degree {max(degs)} is below the fiber dimension {fiber.dim}")
    out = _integrate_block(omega, fiber.t_vars, fiber.s_vars)
    if require_base and out.params():
        raise ValueError(f"parameters {sorted(out.params())} remain after fiber integration")
    return out


# -- boundary of the fiber and Stokes ------------------------------------

def simplex_face_substitution(r: int, i: int, m: int) -> dict[str, Scalar]:
    """Parameter map Delta^{r-1} -> face_i(Delta^r) (the face omitting vertex i).

    The face keeps the remaining vertices in increasing order; the new
    coordinates are again named t1..t_{r-1}.
    """
    if r < 1 or not 0 <= i <= r:
        raise ValueError(f"no face {i} of Delta^{r}")
    subs: dict[str, Scalar] = {}
    if i == 0:
        subs["t1"] = Scalar.barycentric_t0(m, r - 1)
        for j in range(2, r + 1):
            subs[f"t{j}"] = Scalar.param(m, f"t{j - 1}")
    else:
        subs[f"t{i}"] = Scalar.zero(m)
        for j in range(i + 1, r + 1):
            subs[f"t{j}"] = Scalar.param(m, f"t{j - 1}")
    return subs


# Signs attached to the boundary pieces of the fiber.  They are the
# outward-normal-first signs times -1: with base-first fiber integration the
# boundary term of the Stokes identity below is only correct with this flip.
SIMPLEX_FACE_SIGN = {i: (-1) ** (i + 1) for i in range(0, 8)}
INTERVAL_END_SIGN = {1: -1, 0: 1}


def fiber_boundary(fiber: FiberSpec, m: int) -> list[tuple[int, dict, FiberSpec]]:
    """Boundary pieces as (sign, parameter substitution, lower fiber)."""
    if fiber.kind.startswith("chain"):
        raise ValueError("chains are integrated as cycles; use a single simplex fiber")
    out = []
    if fiber.kind in ("simplex", "simplex_interval") and fiber.r >= 1:
        lower = FiberSpec("simplex_interval" if fiber.has_interval else "simplex", fiber.r - 1)
        for i in range(fiber.r + 1):
            out.append((SIMPLEX_FACE_SIGN[i], simplex_face_substitution(fiber.r, i, m), lower))
    if fiber.has_interval:
        lower = FiberSpec.simplex(len(fiber.t_vars))
        # the interval block sits after the simplex block
        sign = (-1) ** len(fiber.t_vars)
        for end in (1, 0):
            out.append((sign * INTERVAL_END_SIGN[end], {"s": Scalar.const(m, end)}, lower))
    return out


def integrate_boundary(omega: Form, fiber: FiberSpec) -> Form:
    total = Form(omega.m)
    for sign, subs, lower in fiber_boundary(fiber, omega.m):
        restricted = omega.substitute_params(subs)
        total = total + _integrate_block(restricted, lower.t_vars, lower.s_vars) * sign
    return total


def stokes_check(omega: Form, fiber: FiberSpec) -> Form:
    """Residual of  int_F dw = d int_F w + (-1)^(deg w + dim F) int_dF w.

    Mixed-degree forms are checked degree by degree.  Zero residual is the contract.
    """
    if fiber.kind.startswith("chain"):
        raise ValueError("unsupported fiber kind for stokes_check: " + fiber.kind)
    residual = Form(omega.m)
    for k in sorted(omega.degrees()):
        w = omega.homogeneous_component(k)
        lhs = _integrate_block(w.exterior_d(), fiber.t_vars, fiber.s_vars)
        rhs = _integrate_block(w, fiber.t_vars, fiber.s_vars).exterior_d()
        rhs = rhs + integrate_boundary(w, fiber) * (-1) ** (k + fiber.dim)
        residual = residual + lhs - rhs
    return residual


# -- the invariant ---------------------------------------------------------

@dataclass
class PsiResult:
    form: Form
    p: int
    r: int
    sign_applied: int
    reference_id: str
    warnings: list[str] = field(default_factory=list)

    @property
    def degree(self) -> int:
        return 2 * self.p - self.r - 1


def homotopy_connection(family: MatrixForm, reference: Connection) -> MatrixForm:
    """D~ = (1 - s) D0 + s D on B x Delta^r x I."""
    d0 = reference.one_form
    return d0 + (family - d0) * Scalar.param(d0.m, "s")


def psi_integrand(sigma: Simplex, reference: Connection, p: InvariantPolynomial,
                  connections: Mapping[str, Connection], strict: bool = True, extra: Sequence[str] = ()) -> Form:
    """The part of P(Omega of D~) on B x Delta^r x I carrying the full fiber volume.

    ``extra`` names further directions every kept term must contain.
    """
    family = family_connection(sigma, connections, strict=strict)
    needed = tuple(extra) + simplex_vars(sigma.dim) + ("s",)
    return chern_weil(p, curvature(homotopy_connection(family, reference)), require=needed)


def psi_form(chain: Chain, reference: Connection, p: InvariantPolynomial,
             connections: Mapping[str, Connection], strict: bool = True) -> Form:
    """(-1)^(r+1) int_{chain x I} P(Omega of D~), without any cycle check."""
    r = chain.dim
    m = reference.base_dim
    total = Form(m)
    for simplex, coeff in chain.items():
        integrand = psi_integrand(simplex, reference, p, connections, strict=strict)
        total = total + integrate_fiber(integrand, FiberSpec.simplex_interval(r), require_base=True) * coeff
    return total * (-1) ** (r + 1)


def noninvariance_warning(p: int, r: int) -> str | None:
    if p == r:
        return "p == r: the result is a differential character, not an R/Z class"
    if p == r + 1:
        return "p == r + 1: the result need not descend to homology"
    return None


def validate_psi_inputs(chain: Chain, reference: Connection, connections: Mapping[str, Connection]) -> None:
    """Raise unless the chain is a relatively flat cycle and the reference is flat and compatible."""
    report = validate_chain(chain, connections)
    if report.missing:
        raise KeyError(f"unknown connections {report.missing}")
    if not report.is_cycle:
        raise NotACycleError("chain is not a cycle")
    bad = [str(s) for s, ok in report.flatness.items() if not ok]
    if bad:
        raise FlatnessError(f"simplices not relatively flat: {bad}")
    if not is_flat(reference):
        raise FlatnessError(f"reference {reference.id!r} is not flat")
    for v in sorted(chain.vertex_ids()):
        c = connections[v]
        if c.rank != reference.rank or c.base_dim != reference.base_dim:
            raise ValueError(f"connection {v!r} does not match the reference rank/base")


def psi(chain: Chain, reference: Connection, p: InvariantPolynomial,
        connections: Mapping[str, Connection]) -> PsiResult:
    """The secondary invariant of a cycle of relatively flat simplices."""
    validate_psi_inputs(chain, reference, connections)
    r = chain.dim
    warnings = []
    msg = noninvariance_warning(p.degree, r)
    if msg:
        log.warning(msg)
        warnings.append(msg)
    form = psi_form(chain, reference, p, connections, strict=False)
    return PsiResult(form=form, p=p.degree, r=r, sign_applied=(-1) ** (r + 1),
                     reference_id=reference.id, warnings=warnings)


def boundary_primitive(k: Chain, reference: Connection, p: InvariantPolynomial,
                       connections: Mapping[str, Connection]) -> Form:
    """eta = -int_{K x I} P(Omega of D~) for a relatively flat r-chain K.

    The fiber Stokes identity gives psi(boundary K) = d(eta) whenever
    p != dim K (the ends s = 0 and s = 1 then contribute nothing), so psi of
    a boundary is exact.  The sign is the boundary-face sign of the fiber
    and does not depend on r.
    """
    r = k.dim
    if r < 1:
        raise ValueError("boundary_primitive needs a chain of dimension >= 1")
    m = reference.base_dim
    total = Form(m)
    for simplex, coeff in k.items():
        integrand = psi_integrand(simplex, reference, p, connections, strict=True)
        total = total + integrate_fiber(integrand, FiberSpec.simplex_interval(r), require_base=True) * coeff
    return -total


def psi_compare_reference(chain: Chain, ref_a: Connection, ref_b: Connection, p: InvariantPolynomial,
                          cycles, connections: Mapping[str, Connection], allow_noninvariant: bool = False):
    """Pairings of psi(ref_a) - psi(ref_b) with each cycle; integers by contract."""
    from .pairing import pair

    if noninvariance_warning(p.degree, chain.dim) and not allow_noninvariant:
        raise ValueError(f"reference comparison needs p not in {{r, r+1}} (p={p.degree}, r={chain.dim})")
    a = psi(chain, ref_a, p, connections).form
    b = psi(chain, ref_b, p, connections).form
    return [pair(a, z) - pair(b, z) for z in cycles]
