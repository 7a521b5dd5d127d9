"""Floating-point cross-checks: pointwise form evaluation, finite differences, quadrature.

Nothing here feeds back into the exact kernel.  The psi integrand is rebuilt
from the connection matrices alone (finite-difference derivatives, explicit
alternating sums), so agreement with the exact pipeline is a real check of
signs and normalisations.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .chernweil import Connection, InvariantPolynomial
from .families import Chain
from .fiber import FiberSpec, simplex_vars
from .forms import Form
from .pairing import BaseCycle


@dataclass(frozen=True)
class EvalPoint:
    x: tuple[float, ...]
    t: tuple[float, ...] = ()
    s: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "t", tuple(float(v) for v in self.t))
        if any(v < 0 for v in self.t) or sum(self.t) > 1:
            raise ValueError(f"t = {self.t} lies outside the simplex")
        if self.s is not None and not 0 <= self.s <= 1:
            raise ValueError(f"s = {self.s} lies outside [0, 1]")

    @property
    def names(self) -> list[str]:
        """Coordinate names in the order vectors are written."""
        out = [f"x{a}" for a in range(1, len(self.x) + 1)] + list(simplex_vars(len(self.t)))
        return out + (["s"] if self.s is not None else [])

    def params(self) -> dict[str, float]:
        out = {f"t{j}": v for j, v in enumerate(self.t, start=1)}
        if self.s is not None:
            out["s"] = self.s
        return out

    def shifted(self, v: Sequence[float], h: float) -> "EvalPoint":
        m, r = len(self.x), len(self.t)
        v = np.asarray(v, dtype=float)
        x = tuple(np.asarray(self.x) + h * v[:m])
        t = tuple(np.asarray(self.t) + h * v[m:m + r])
        s = None if self.s is None else self.s + h * v[m + r]
        # finite-difference stencils may step just outside the closed domain
        pt = object.__new__(EvalPoint)
        object.__setattr__(pt, "x", x)
        object.__setattr__(pt, "t", t)
        object.__setattr__(pt, "s", s)
        return pt


def eval_form(omega: Form, pt: EvalPoint, vectors: Sequence[Sequence[float]]) -> float:
    """omega at pt on the given tangent vectors (determinant convention)."""
    names = pt.names
    index = {n: i for i, n in enumerate(names)}
    vecs = np.asarray(vectors, dtype=float).reshape(len(vectors), -1) if len(vectors) else np.zeros((0, len(names)))
    if len(vectors) and vecs.shape[1] != len(names):
        raise ValueError(f"vectors need {len(names)} components ({names})")
    degs = omega.degrees()
    k = len(vectors)
    if degs and degs != {k}:
        raise ValueError(f"form of degrees {sorted(degs)} evaluated on {k} vectors")
    params = pt.params()
    total = 0.0
    for key, c in omega.items():
        missing = [d for d in key if d not in index]
        if missing:
            raise ValueError(f"point has no coordinate for {missing}")
        cols = [index[d] for d in key]
        det = float(np.linalg.det(vecs[:, cols])) if k else 1.0
        if det == 0.0:
            continue
        total += det * float(c.evaluate(pt.x, params))
    return total


def fd_exterior_d(omega: Form, pt: EvalPoint, vectors: Sequence[Sequence[float]], h: float = 1e-5) -> float:
    """d omega (v_0..v_k) = sum_i (-1)^i D_{v_i} omega(v_0..^v_i..v_k), central differences."""
    if h <= 0:
        raise ValueError("step must be positive")
    vectors = [list(v) for v in vectors]
    total = 0.0
    for i, v in enumerate(vectors):
        rest = vectors[:i] + vectors[i + 1:]
        up = eval_form(omega, pt.shifted(v, h), rest)
        down = eval_form(omega, pt.shifted(v, -h), rest)
        total += (-1) ** i * (up - down) / (2 * h)
    return total


# -- quadrature --------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    """``tensor_grid`` (points per axis) or ``monte_carlo`` (samples, seed)."""

    method: str = "tensor_grid"
    points: int = 16
    samples: int = 100_000
    seed: int = 42
    tolerance: float = 1e-6
    gauss_points: int | None = None

    def __post_init__(self):
        if self.method not in ("tensor_grid", "monte_carlo"):
            raise ValueError(f"unknown quadrature method {self.method!r}")
        if self.points < 2 or self.samples < 2 or (self.gauss_points is not None and self.gauss_points < 2):
            raise ValueError("need at least two points / samples")

    @property
    def gauss(self) -> int:
        return self.points if self.gauss_points is None else self.gauss_points


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    method: str
    evaluations: int
    seed: int | None = None


# integrand(X, T, S) -> values; X (N, m), T (N, r), S (N,)
Integrand = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass
class Domain:
    """cycle directions x simplex(r) x optional interval, with the base point for the rest."""

    m: int
    cycle: BaseCycle | None = None
    r: int = 0
    simplex: bool = False
    interval: bool = False
    base_point: tuple[float, ...] = field(default_factory=tuple)

    @property
    def torus_dims(self) -> tuple[int, ...]:
        return self.cycle.directions if self.cycle else ()

    def anchor(self) -> np.ndarray:
        x = np.zeros(self.m)
        if self.base_point:
            x[:] = self.base_point
        if self.cycle:
            for a, v in self.cycle.full_offsets(self.m).items():
                x[a - 1] = float(v)
        return x


def _domain_of(domain, m: int, base_point) -> Domain:
    cycle, fiber = None, None
    if isinstance(domain, tuple):
        cycle, fiber = domain
    elif isinstance(domain, BaseCycle):
        cycle = domain
    elif isinstance(domain, FiberSpec):
        fiber = domain
    else:
        raise TypeError(f"unsupported domain {domain!r}")
    if fiber is not None and fiber.kind.startswith("chain"):
        raise ValueError("integrate chains simplex by simplex")
    bp = tuple(base_point) if base_point is not None else ()
    if bp and len(bp) != m:
        raise ValueError(f"base point needs {m} coordinates")
    return Domain(
        m=m,
        cycle=cycle,
        r=len(fiber.t_vars) if fiber else 0,
        simplex=bool(fiber and fiber.t_vars),
        interval=bool(fiber and fiber.has_interval),
        base_point=bp,
    )


def _gauss01(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1) / 2, w / 2


def _grid(dom: Domain, n: int, ng: int):
    """Tensor grid: periodic trapezoid on torus axes, collapsed Gauss rule on the simplex."""
    axes, weights = [], []
    for _ in dom.torus_dims:
        axes.append(np.arange(n) / n)
        weights.append(np.full(n, 1.0 / n))
    for _ in range(dom.r if dom.simplex else 0):
        u, w = _gauss01(ng)
        axes.append(u)
        weights.append(w)
    if dom.interval:
        u, w = _gauss01(ng)
        axes.append(u)
        weights.append(w)
    if axes:
        mesh = np.meshgrid(*axes, indexing="ij")
        wmesh = np.meshgrid(*weights, indexing="ij")
        cols = [a.ravel() for a in mesh]
        w = np.prod([a.ravel() for a in wmesh], axis=0)
    else:
        cols, w = [], np.ones(1)
    npts = len(w)
    X = np.tile(dom.anchor(), (npts, 1))
    k = 0
    for a in dom.torus_dims:
        X[:, a - 1] = cols[k]
        k += 1
    T = np.zeros((npts, dom.r))
    if dom.simplex:
        u = np.stack(cols[k:k + dom.r], axis=1)
        k += dom.r
        rest = np.ones(npts)
        for j in range(dom.r):
            T[:, j] = rest * u[:, j]
            # Jacobian of the collapsed map
            if j < dom.r - 1:
                w = w * (1 - u[:, j]) ** (dom.r - 1 - j)
            rest = rest * (1 - u[:, j])
    S = cols[k] if dom.interval else np.zeros(npts)
    return X, T, S, w


def _sample(dom: Domain, rng: np.random.Generator, n: int):
    X = np.tile(dom.anchor(), (n, 1))
    for a in dom.torus_dims:
        X[:, a - 1] = rng.random(n)
    T = np.zeros((n, dom.r))
    vol = 1.0
    if dom.simplex:
        e = rng.exponential(size=(n, dom.r + 1))
        T = e[:, 1:] / e.sum(axis=1, keepdims=True)
        vol = 1.0 / math.factorial(dom.r)
    S = rng.random(n) if dom.interval else np.zeros(n)
    return X, T, S, vol


def form_integrand(omega: Form, dirs: Sequence[str]) -> Integrand:
    """Pointwise omega(e_dirs) as a vectorised integrand."""
    coeff = omega.coefficient(*dirs)

    def f(X, T, S):
        params = {f"t{j + 1}": T[:, j] for j in range(T.shape[1])}
        params["s"] = S
        return np.broadcast_to(np.asarray(coeff.evaluate(X, params), dtype=float), (X.shape[0],))

    return f


def quad_integral(omega: Form | Integrand, domain, spec: QuadratureSpec, m: int | None = None,
                  base_point: Sequence[float] | None = None, base_dirs: Sequence[str] = ()) -> QuadResult:
    """Integral over a subtorus, a fiber, or (cycle, fiber) of omega.

    For Form input the integrand is omega evaluated on the unit vectors of
    ``base_dirs``, the cycle directions and then the fiber directions.
    """
    if isinstance(omega, Form):
        m = omega.m
    if m is None:
        raise ValueError("base dimension required for callable integrands")
    dom = _domain_of(domain, m, base_point)
    if isinstance(omega, Form):
        dirs = list(base_dirs) + [f"x{a}" for a in dom.torus_dims]
        dirs += list(simplex_vars(dom.r)) if dom.simplex else []
        dirs += ["s"] if dom.interval else []
        degs = omega.degrees()
        if degs and degs != {len(dirs)}:
            raise ValueError(f"form degrees {sorted(degs)} do not match the domain ({len(dirs)} directions)")
        f = form_integrand(omega, dirs)
    else:
        f = omega
    if spec.method == "tensor_grid":
        # the error estimate compares against a grid with two thirds of the points per axis
        n, ng = spec.points, spec.gauss
        cn, cg = max(2, 2 * n // 3), max(2, 2 * ng // 3)
        fine = _grid_sum(f, dom, n, ng)
        coarse = _grid_sum(f, dom, cn, cg)
        evals = _grid_size(dom, n, ng) + _grid_size(dom, cn, cg)
        return QuadResult(fine, abs(fine - coarse), "tensor_grid", evals)
    rng = np.random.default_rng(spec.seed)
    n_total = spec.samples
    chunk = GRID_CHUNK
    sums, sqs, done = [], [], 0
    vol = 1.0
    while done < n_total:
        k = min(chunk, n_total - done)
        X, T, S, vol = _sample(dom, rng, k)
        vals = np.asarray(f(X, T, S), dtype=float)
        sums.append(vals.sum())
        sqs.append((vals * vals).sum())
        done += k
    mean = math.fsum(sums) / n_total
    var = max(math.fsum(sqs) / n_total - mean * mean, 0.0) * n_total / (n_total - 1)
    return QuadResult(vol * mean, vol * math.sqrt(var / n_total), "monte_carlo", n_total, spec.seed)


def _grid_size(dom: Domain, n: int, ng: int) -> int:
    return n ** len(dom.torus_dims) * ng ** ((dom.r if dom.simplex else 0) + (1 if dom.interval else 0))


GRID_CHUNK = 32_768


def _grid_sum(f: Integrand, dom: Domain, n: int, ng: int) -> float:
    X, T, S, w = _grid(dom, n, ng)
    # torus axes vary slowest, so each chunk sees few distinct base points
    parts = []
    for lo in range(0, len(w), GRID_CHUNK):
        hi = lo + GRID_CHUNK
        vals = np.asarray(f(X[lo:hi], T[lo:hi], S[lo:hi]), dtype=float)
        parts.append(float(np.sum(vals * w[lo:hi])))
    return math.fsum(parts)


# -- independent psi integrand ----------------------------------------------

FD_STEP = 2e-3


def _eval_entries(conn: Connection, X: np.ndarray, alpha: int) -> np.ndarray:
    """The dx_alpha matrix of a connection at points X, shape (N, n, n)."""
    n = conn.rank
    out = np.zeros((X.shape[0], n, n))
    for i, row in enumerate(conn.component(alpha)):
        for j, entry in enumerate(row):
            if not entry.is_zero():
                out[:, i, j] = entry.evaluate(X)
    return out


def _deriv_entries(conn: Connection, X: np.ndarray, alpha: int, beta: int, h: float = FD_STEP) -> np.ndarray:
    """d/dx_beta of the dx_alpha matrix, sixth-order central differences."""
    e = np.zeros(X.shape[1])
    e[beta - 1] = h
    f = lambda k: _eval_entries(conn, X + k * e, alpha)  # noqa: E731
    return (f(3) - 9 * f(2) + 45 * f(1) - 45 * f(-1) + 9 * f(-2) - f(-3)) / (60 * h)


def _pairings(k: int):
    """Ordered partitions of range(2k) into sorted pairs, with permutation signs."""
    out = []

    def rec(remaining, acc):
        if not remaining:
            perm = [i for pr in acc for i in pr]
            inv = sum(1 for a in range(len(perm)) for b in range(a + 1, len(perm)) if perm[a] > perm[b])
            out.append(((-1) ** inv, tuple(acc)))
            return
        for i, j in itertools.combinations(remaining, 2):
            rest = [x for x in remaining if x not in (i, j)]
            rec(rest, acc + [(i, j)])

    rec(list(range(2 * k)), [])
    return out


def _mm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # matrix product for stacks laid out as (n, n, N)
    return (a[:, :, None, :] * b[None, :, :, :]).sum(axis=1)


def _tr_mm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a * b.transpose(1, 0, 2)).sum(axis=(0, 1))


def eval_invariant(p: InvariantPolynomial, curv: Mapping[tuple[int, int], np.ndarray], ndirs: int) -> np.ndarray:
    """P(Omega) on the unit vectors 0..2p-1, given Omega(e_i, e_j) for i < j as (N, n, n) stacks."""
    if ndirs != 2 * p.degree:
        raise ValueError("P(Omega) is evaluated on 2p vectors")
    mats = {k: np.ascontiguousarray(np.moveaxis(v, 0, -1)) for k, v in curv.items()}
    prefix: dict = {}

    def product(seq):
        # products of leading pairs are shared between many pairings
        if len(seq) == 1:
            return mats[seq[0]]
        if seq not in prefix:
            prefix[seq] = _mm(product(seq[:-1]), mats[seq[-1]])
        return prefix[seq]

    total = 0.0
    for sign, pairs in _pairings(p.degree):
        pos = 0
        val = 1.0
        for k in p.factors:
            block = pairs[pos: pos + k]
            pos += k
            if k == 1:
                val = val * np.trace(mats[block[0]], axis1=0, axis2=1)
            else:
                val = val * _tr_mm(product(block[:-1]), mats[block[-1]])
        total = total + sign * val
    return total


def numeric_psi_integrand(chain: Chain, reference: Connection, p: InvariantPolynomial,
                          connections: Mapping[str, Connection], base_dirs: Sequence[str]) -> Integrand:
    """(-1)^(r+1) sum_sigma c_sigma P(Omega of D~)(e_base, e_t1..e_tr, e_s) in floats.

    D~ = (1 - s) D0 + s sum_j t_j D^j with t_0 = 1 - sum t; derivatives in x
    by finite differences, in t and s from the affine structure.
    """
    r = chain.dim
    alphas = [int(d[1:]) for d in base_dirs]
    if len(alphas) + r + 1 != 2 * p.degree:
        raise ValueError("base directions do not complete the degree of P")
    sign = (-1) ** (r + 1)

    def f(X, T, S):
        ux, inv = np.unique(X, axis=0, return_inverse=True)
        inv = inv.ravel()
        cache: dict = {}

        def vals(conn):
            if conn.id not in cache:
                a_val = {a: _eval_entries(conn, ux, a)[inv] for a in alphas}
                a_der = {(a, b): _deriv_entries(conn, ux, a, b)[inv] for a in alphas for b in alphas if a != b}
                cache[conn.id] = (a_val, a_der)
            return cache[conn.id]

        total = np.zeros(X.shape[0])
        s = S[:, None, None]
        for simplex, coeff in chain.items():
            verts = [connections[v] for v in simplex.vertices]
            c = [1 - T.sum(axis=1)] + [T[:, j] for j in range(r)]
            c = [ci[:, None, None] for ci in c]
            ref_v, ref_d = vals(reference)
            fam_v = {a: sum(c[j] * vals(verts[j])[0][a] for j in range(r + 1)) for a in alphas}
            fam_d = {ab: sum(c[j] * vals(verts[j])[1][ab] for j in range(r + 1)) for ab in ref_d}
            at = {a: (1 - s) * ref_v[a] + s * fam_v[a] for a in alphas}
            dt = {ab: (1 - s) * ref_d[ab] + s * fam_d[ab] for ab in ref_d}
            # directions: base alphas, then t1..tr, then s
            nd = 2 * p.degree
            curv = {}
            kinds = [("x", a) for a in alphas] + [("t", j) for j in range(1, r + 1)] + [("s", 0)]
            for i in range(nd):
                for j in range(i + 1, nd):
                    ki, kj = kinds[i], kinds[j]
                    if ki[0] == "x" and kj[0] == "x":
                        a, b = ki[1], kj[1]
                        curv[(i, j)] = dt[(b, a)] - dt[(a, b)] + at[a] @ at[b] - at[b] @ at[a]
                    elif ki[0] == "x":
                        # Omega(e_a, e_param) = -d_param A~_a
                        curv[(i, j)] = -_param_deriv(kj, ki[1], verts, reference, vals, c, s)
                    else:
                        curv[(i, j)] = np.zeros((X.shape[0], reference.rank, reference.rank))
            total = total + coeff * eval_invariant(p, curv, nd)
        return sign * total

    return f


def _param_deriv(kind, a, verts, reference, vals, c, s):
    if kind[0] == "t":
        j = kind[1]
        return s * (vals(verts[j])[0][a] - vals(verts[0])[0][a])
    fam = sum(c[j] * vals(verts[j])[0][a] for j in range(len(verts)))
    return fam - vals(reference)[0][a]


def oracle_pair(chain: Chain, reference: Connection, p: InvariantPolynomial, connections: Mapping[str, Connection],
                cycle: BaseCycle, spec: QuadratureSpec) -> QuadResult:
    """Quadrature of the psi pairing over cycle x Delta^r x I."""
    m = reference.base_dim
    f = numeric_psi_integrand(chain, reference, p, connections, [f"x{a}" for a in cycle.directions])
    fiber = FiberSpec.simplex_interval(chain.dim)
    res = quad_integral(f, (cycle, fiber), spec, m=m)
    k = cycle.multiplicity
    return QuadResult(res.value * k, res.error * abs(k), res.method, res.evaluations, res.seed)


def oracle_psi_value(chain: Chain, reference: Connection, p: InvariantPolynomial,
                     connections: Mapping[str, Connection], x: Sequence[float], base_dirs: Sequence[str],
                     spec: QuadratureSpec) -> QuadResult:
    """psi(chain) at the base point x on the unit vectors of base_dirs."""
    m = reference.base_dim
    f = numeric_psi_integrand(chain, reference, p, connections, base_dirs)
    return quad_integral(f, FiberSpec.simplex_interval(chain.dim), spec, m=m, base_point=x)


# -- golden records ----------------------------------------------------------

GOLDEN_POINT = (0.1, 0.23, 0.37, 0.41, 0.55, 0.67)
GRID_TOLERANCE = 1e-6
MC_SIGMAS = 3.0
# finite-difference roundoff floor for integrands that vanish identically
MC_FLOOR = 1e-9


@dataclass(frozen=True)
class GoldenRecord:
    scenario: str
    quantity: str
    method: str
    seed: int | None
    value: float
    error: float
    tolerance: float

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario, "quantity": self.quantity, "method": self.method, "seed": self.seed,
            "value": float(f"{self.value:.12g}"), "error": float(f"{self.error:.12g}"),
            "tolerance": float(f"{self.tolerance:.12g}"),
        }

    def accepts(self, exact: float) -> bool:
        return abs(exact - self.value) <= self.tolerance


def _golden_point(m: int) -> tuple[float, ...]:
    return tuple(GOLDEN_POINT[i % len(GOLDEN_POINT)] for i in range(m))


def golden_quantities(scenario) -> list[tuple[str, object]]:
    """(quantity id, target) pairs for the default chain: cycle pairings and point values."""
    from .pairing import subtorus_cycles

    _, chain = scenario.chain(None)
    k = 2 * scenario.polynomial.degree - chain.dim - 1
    out: list[tuple[str, object]] = []
    for name, z in sorted(scenario.cycles.items()):
        if z.dim == k:
            out.append((f"pair:{name}", z))
    if k >= 0:
        for z in subtorus_cycles(scenario.base_dim, k):
            out.append(("psi_value:" + "".join(z.dirs()), z.dirs()))
    return out


def make_golden(scenario, grid: QuadratureSpec, mc: QuadratureSpec, mc_point_samples: int = 100_000) -> list[GoldenRecord]:
    """Oracle values for every golden quantity, by tensor grid and by Monte Carlo."""
    _, chain = scenario.chain(None)
    ref = scenario.connections[scenario.reference]
    p, conns = scenario.polynomial, scenario.connections
    x0 = _golden_point(scenario.base_dim)
    records = []
    for qid, target in golden_quantities(scenario):
        for spec in (grid, mc):
            if qid.startswith("pair:"):
                res = oracle_pair(chain, ref, p, conns, target, spec)
            else:
                if spec.method == "monte_carlo":
                    spec = QuadratureSpec("monte_carlo", samples=mc_point_samples, seed=spec.seed)
                res = oracle_psi_value(chain, ref, p, conns, x0, list(target), spec)
            tol = GRID_TOLERANCE if spec.method == "tensor_grid" else max(MC_SIGMAS * res.error, MC_FLOOR)
            seed = spec.seed if spec.method == "monte_carlo" else None
            records.append(GoldenRecord(scenario.id, qid, spec.method, seed, res.value, res.error, tol))
    return records


def load_golden(path) -> list[GoldenRecord]:
    import json
    from pathlib import Path

    raw = json.loads(Path(path).read_text())
    return [GoldenRecord(**{k: rec[k] for k in ("scenario", "quantity", "method", "seed", "value", "error", "tolerance")})
            for rec in raw["records"]]


def dump_golden(records: Sequence[GoldenRecord], meta: Mapping | None = None) -> str:
    import json

    body = {"records": [r.to_json() for r in records]}
    if meta:
        body["meta"] = dict(meta)
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def exact_quantity(scenario, qid: str, psi_form_cache: dict | None = None) -> float:
    """The exact kernel's value for a golden quantity id, rendered to float."""
    from .fiber import psi
    from .pairing import pair

    cache = psi_form_cache if psi_form_cache is not None else {}
    if "form" not in cache:
        _, chain = scenario.chain(None)
        cache["form"] = psi(chain, scenario.connections[scenario.reference], scenario.polynomial,
                            scenario.connections).form
    form = cache["form"]
    kind, name = qid.split(":", 1)
    if kind == "pair":
        return pair(form, scenario.cycles[name]).value
    if kind == "psi_value":
        dirs = ["x" + d for d in name.split("x") if d]
        return float(form.coefficient(*dirs).evaluate(_golden_point(scenario.base_dim)))
    raise ValueError(f"unknown golden quantity {qid!r}")
