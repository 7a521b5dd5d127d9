"""Seeded generators for random forms and relatively flat families."""
from __future__ import annotations

import random
from fractions import Fraction
from typing import Sequence

from .chernweil import Connection, GaugeTransform, gauge_apply
from .forms import Form, MatrixForm
from .scalars import COS, SIN, Scalar


def _rat(rng: random.Random, lo: int = -3, hi: int = 3) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.choice((1, 1, 2, 3)))


def random_scalar(rng: random.Random, m: int, params: Sequence[str] = (), terms: int = 3,
                  max_freq: int = 2, max_deg: int = 3, tau: bool = False) -> Scalar:
    out = Scalar.zero(m)
    for _ in range(terms):
        freq = [rng.randint(-max_freq, max_freq) if rng.random() < 0.5 else 0 for _ in range(m)]
        phase = rng.choice((COS, SIN)) if any(freq) else COS
        term = Scalar.trig(m, freq, phase, _rat(rng), rng.randint(0, 1) if tau else 0)
        for name in params:
            e = rng.randint(0, max_deg)
            if e:
                term = term * Scalar.param(m, name, e)
        out = out + term
    return out


def random_form(rng: random.Random, m: int, params: Sequence[str], degree: int, terms: int = 3, **kw) -> Form:
    """Homogeneous form of the given degree in the base and parameter directions."""
    dirs = [f"x{a}" for a in range(1, m + 1)] + list(params)
    if degree > len(dirs):
        return Form(m)
    out = Form(m)
    for _ in range(terms):
        key = rng.sample(dirs, degree)
        out = out + Form.d(m, *key, coeff=random_scalar(rng, m, params, terms=2, **kw))
    return out


def random_matrix_one_form(rng: random.Random, n: int, m: int, terms: int = 2) -> MatrixForm:
    comps = {}
    for a in rng.sample(range(1, m + 1), min(m, 2)):
        comps[f"x{a}"] = [[random_scalar(rng, m, terms=terms, max_freq=1) if rng.random() < 0.6 else Scalar.zero(m)
                           for _ in range(n)] for _ in range(n)]
    return MatrixForm.from_components(n, m, comps)


def random_connection(rng: random.Random, cid: str, n: int, m: int) -> Connection:
    """An arbitrary (generally non-flat) connection."""
    return Connection(cid, random_matrix_one_form(rng, n, m))


def commuting_basis(rng: random.Random, n: int) -> list[list[list[Fraction]]]:
    """Identity, N and N^2 for a random integer matrix N; they commute pairwise."""
    nmat = [[Fraction(rng.randint(-2, 2)) for _ in range(n)] for _ in range(n)]
    ident = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    n2 = [[sum(nmat[i][k] * nmat[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    return [ident, nmat, n2][: max(1, min(3, n))]


def closed_scalar_one_form(rng: random.Random, m: int, max_freq: int = 2) -> dict[str, Scalar]:
    """c . dx + d(f) for random rational c and a random trig polynomial f; returns components."""
    comps = {f"x{a}": Scalar.const(m, _rat(rng)) for a in range(1, m + 1) if rng.random() < 0.6}
    for _ in range(rng.randint(0, 2)):
        freq = [rng.randint(-max_freq, max_freq) if rng.random() < 0.5 else 0 for _ in range(m)]
        if not any(freq):
            continue
        f = Scalar.trig(m, freq, rng.choice((COS, SIN)), _rat(rng))
        for a in range(1, m + 1):
            da = f.partial(f"x{a}")
            if not da.is_zero():
                comps[f"x{a}"] = comps.get(f"x{a}", Scalar.zero(m)) + da
    return comps


def rotation_gauge(m: int, n: int, freq: Sequence[int]) -> GaugeTransform:
    """Rotation by 2 pi (freq . x) in the first two coordinates of R^n."""
    if n < 2:
        raise ValueError("rotations need rank >= 2")
    c = Scalar.trig(m, freq, COS)
    s = Scalar.trig(m, freq, SIN)
    one, zero = Scalar.const(m, 1), Scalar.zero(m)
    g = [[one if i == j else zero for j in range(n)] for i in range(n)]
    gi = [row[:] for row in g]
    g[0][0], g[0][1], g[1][0], g[1][1] = c, -s, s, c
    gi[0][0], gi[0][1], gi[1][0], gi[1][1] = c, s, -s, c
    return GaugeTransform(g, gi)


def commuting_family(rng: random.Random, n: int, m: int, count: int, prefix: str = "D",
                     closed: bool = True, gauge: GaugeTransform | None = None) -> list[Connection]:
    """Connections sum_k omega_k M_k with commuting constant M_k and closed omega_k.

    Every tuple drawn from the result is relatively flat.  With ``closed=False``
    the omega_k are constant, which keeps flatness too.  An optional gauge is
    applied to every member.
    """
    basis = commuting_basis(rng, n)
    out = []
    for j in range(count):
        one_form = MatrixForm.zeros(n, m)
        for mat in basis:
            comps = closed_scalar_one_form(rng, m) if closed else {
                f"x{a}": Scalar.const(m, _rat(rng)) for a in range(1, m + 1) if rng.random() < 0.6}
            for d, w in comps.items():
                entries = [[Form.d(m, d, coeff=w * x) for x in row] for row in mat]
                one_form = one_form + MatrixForm(entries)
        conn = Connection(f"{prefix}{j}", one_form)
        if gauge is not None:
            conn = gauge_apply(conn, gauge, conn.id)
        out.append(conn)
    return out


def constant_gauge(rng: random.Random, n: int, m: int) -> GaugeTransform:
    """A random unipotent upper-triangular matrix and its exact inverse."""
    u = [[Fraction(int(i == j)) if j <= i else Fraction(rng.randint(-2, 2)) for j in range(n)] for i in range(n)]
    # back substitution for the inverse of a unit upper-triangular matrix
    inv = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for i in reversed(range(n)):
        for j in range(i + 1, n):
            inv[i] = [inv[i][k] - u[i][j] * inv[j][k] for k in range(n)]
    g = [[Scalar.const(m, x) for x in row] for row in u]
    gi = [[Scalar.const(m, x) for x in row] for row in inv]
    return GaugeTransform(g, gi)

