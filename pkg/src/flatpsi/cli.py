"""Command line entry point: validate, psi, pair, properties, transgression, golden."""
from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from itertools import combinations
from pathlib import Path
from typing import Any

import numpy as np

from .chernweil import Connection, chern_weil, curvature, gauge_apply, is_flat, transgression
from .families import Chain, FlatnessError, NotACycleError, affine_family, boundary, validate_chain
from .fiber import (FiberSpec, boundary_primitive, noninvariance_warning, psi, psi_compare_reference,
                    stokes_check, validate_psi_inputs)
from .forms import Form, MatrixForm, dir_key
from .pairing import BaseCycle, RZValue, closedness_check, pair, pair_total, subtorus_cycles
from .randomized import random_form
from .scenario import Scenario, ScenarioError, ScenarioParseError, load_scenario

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_PARSE = 2
EXIT_SEMANTIC = 3
EXIT_NONINVARIANT = 4

# statements each check asserts; reports carry them as "theorem"
THEOREMS = {
    "flatness": "connection is flat",
    "cycle": "chain has zero boundary",
    "relative_flatness": "every affine combination of the simplex vertices is flat",
    "gauge_flatness": "gauge transformation preserves flatness",
    "stokes": "fiber integral of d(w) = d(fiber integral) + signed boundary integral",
    "bidegree": "family curvature is of pure bidegree (1,1) and equals sum dt_j ^ (D^j - D^0)",
    "integrand_vanishing": "P(family curvature) = 0 when deg P exceeds the simplex dimension",
    "closed": "psi form is closed when p != r",
    "boundary": "psi of a boundary equals d(eta) and pairs to zero",
    "p_lt_r": "psi vanishes when p < r",
    "gauge": "psi is unchanged by a simultaneous constant gauge transformation",
    "reference": "changing the flat reference changes every pairing by an integer",
    "fubini": "pairing of psi equals the total integral over cycle x chain x interval",
    "homotopy": "d(transgression) = P(Omega_1) - P(Omega_0)",
    "oracle": "exact value agrees with numerical quadrature",
    "golden": "exact value agrees with the stored oracle golden",
    "preconditions": "chain is a relatively flat cycle and the reference is flat",
}

log = logging.getLogger("flatpsi")


class Refused(Exception):
    """p in {r, r+1} without --allow-noninvariant."""


# -- report helpers ------------------------------------------------------------

def _round_floats(obj: Any) -> Any:
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def form_to_json(f: Form) -> dict:
    terms = sorted(f.items(), key=lambda kv: [dir_key(d) for d in kv[0]])
    degs = sorted(f.degrees())
    return {
        "degree": degs[0] if len(degs) == 1 else (None if not degs else degs),
        "terms": [{"dirs": list(k), "coeff": str(c)} for k, c in terms],
        "is_zero": f.is_zero(),
    }


def rz_to_json(v: RZValue) -> dict:
    return {"exact": v.exact_str(), "float": v.value, "mod_one": v.mod_one}


class Report:
    def __init__(self, command: str, scenario: Scenario):
        self.body: dict[str, Any] = {"command": command, "scenario": scenario.id, "checks": [], "warnings": []}

    def check(self, name: str, theorem: str, ok: bool, tolerance: float | None = 0.0, exact_value: Any = None,
              float_value: float | None = None, detail: str | None = None):
        entry: dict[str, Any] = {"name": name, "status": "pass" if ok else "fail", "theorem": THEOREMS[theorem],
                                 "tolerance": tolerance}
        if exact_value is not None:
            entry["exact_value"] = exact_value
        if float_value is not None:
            entry["float_value"] = float_value
        if detail:
            entry["detail"] = detail
        self.body["checks"].append(entry)
        return ok

    def warn(self, msg: str):
        self.body["warnings"].append(msg)

    @property
    def ok(self) -> bool:
        return all(c["status"] == "pass" for c in self.body["checks"])

    def finish(self, **extra) -> dict:
        self.body.update(extra)
        self.body["status"] = "pass" if self.ok else "fail"
        return _round_floats(self.body)


# -- shared selection logic ----------------------------------------------------

def _select(sc: Scenario, args) -> tuple[str, Chain, Connection]:
    name, chain = sc.chain(args.chain)
    ref = sc.connection(args.reference or sc.reference, "--reference")
    return name, chain, ref


def _gate(sc: Scenario, chain: Chain, args, report: Report):
    msg = noninvariance_warning(sc.polynomial.degree, chain.dim)
    if msg:
        if not args.allow_noninvariant:
            raise Refused(msg + "; pass --allow-noninvariant to compute it anyway")
        report.warn(msg)


def _preconditions(report: Report, chain: Chain, ref: Connection, conns) -> bool:
    try:
        validate_psi_inputs(chain, ref, conns)
    except (NotACycleError, FlatnessError, ValueError, KeyError) as exc:
        report.check("preconditions", "preconditions", False, detail=str(exc))
        return False
    return True


def _psi_degree(sc: Scenario, chain: Chain) -> int:
    return 2 * sc.polynomial.degree - chain.dim - 1


def _boundary_source(sc: Scenario, name: str) -> str | None:
    spec = sc.chain_specs.get(name)
    return spec.boundary_of if spec else None


# -- commands ----------------------------------------------------------------

def cmd_validate(sc: Scenario, args) -> dict:
    rep = Report("validate", sc)
    for cid in [sc.reference] + list(sc.alternate_references):
        rep.check(f"flat:{cid}", "flatness", is_flat(sc.connections[cid]))
    names = [sc.chain(args.chain)[0]] if args.chain else sorted(sc.chains)
    for name in names:
        chain = sc.chains[name]
        report = validate_chain(chain, sc.connections)
        if sc.chain_specs[name].cycle:
            rep.check(f"cycle:{name}", "cycle", report.is_cycle)
        for simplex, ok in report.flatness.items():
            rep.check(f"relatively_flat:{name}:{simplex}", "relative_flatness", ok)
    if sc.gauge is not None:
        g = sc.gauges[sc.gauge]
        for cid, conn in sorted(sc.connections.items()):
            if is_flat(conn):
                rep.check(f"gauge_flatness:{sc.gauge}:{cid}", "gauge_flatness", is_flat(gauge_apply(conn, g, cid)))
    flat = {cid: is_flat(c) for cid, c in sorted(sc.connections.items())}
    return rep.finish(result={"connections_flat": flat,
                              "chains": {n: {"dim": c.dim, "terms": len(c.items())} for n, c in sorted(sc.chains.items())}})


def _oracle_point(seed: int, m: int) -> list[float]:
    rng = np.random.default_rng(seed)
    return [float(v) for v in np.round(rng.random(m), 6)]


def cmd_psi(sc: Scenario, args) -> dict:
    from .oracle import QuadratureSpec, oracle_psi_value

    rep = Report("psi", sc)
    name, chain, ref = _select(sc, args)
    _gate(sc, chain, args, rep)
    p, r = sc.polynomial.degree, chain.dim
    if not _preconditions(rep, chain, ref, sc.connections):
        return rep.finish(chain=name, reference=ref.id, p=p, r=r)
    res = psi(chain, ref, sc.polynomial, sc.connections)
    if p != r:
        rep.check("closed", "closed", closedness_check(res.form))
    if p < r:
        rep.check("p_lt_r_zero", "p_lt_r", res.form.is_zero())
    source = _boundary_source(sc, name)
    if source is not None and p != sc.chains[source].dim:
        eta = boundary_primitive(sc.chains[source], ref, sc.polynomial, sc.connections)
        rep.check("boundary_exact", "boundary", res.form == eta.exterior_d(),
                  detail=f"psi({name}) = d(eta) with eta from {source}")
    if args.oracle and res.degree >= 0:
        x = _oracle_point(args.seed, sc.base_dim)
        spec = QuadratureSpec(points=8, gauss_points=6)
        for dirs in combinations([f"x{a}" for a in range(1, sc.base_dim + 1)], res.degree):
            exact = float(res.form.coefficient(*dirs).evaluate(x))
            q = oracle_psi_value(chain, ref, sc.polynomial, sc.connections, x, list(dirs), spec)
            tol = 1e-6 * max(1.0, abs(exact))
            rep.check(f"oracle:psi_value:{''.join(dirs)}", "oracle", abs(exact - q.value) <= tol, tolerance=tol,
                      float_value=q.value, exact_value=exact, detail=f"x = {x}")
    for w in res.warnings:
        if w not in rep.body["warnings"]:
            rep.warn(w)
    return rep.finish(chain=name, reference=ref.id, p=p, r=r,
                      result={"form": form_to_json(res.form), "degree": res.degree, "sign_applied": res.sign_applied})


def _cycles_for(sc: Scenario, args, k: int) -> dict[str, BaseCycle]:
    if args.cycle:
        if args.cycle not in sc.cycles:
            raise ScenarioError("--cycle", f"unknown cycle {args.cycle!r}")
        z = sc.cycles[args.cycle]
        if z.dim != k:
            raise ScenarioError(f"$.cycles.{args.cycle}.directions",
                                f"cycle dimension {z.dim} differs from the psi degree {k}")
        return {args.cycle: z}
    out = {n: z for n, z in sorted(sc.cycles.items()) if z.dim == k}
    if not out:
        raise ScenarioError("$.cycles", f"no cycle of dimension {k}")
    return out


def cmd_pair(sc: Scenario, args) -> dict:
    from .oracle import QuadratureSpec, load_golden, oracle_pair

    rep = Report("pair", sc)
    name, chain, ref = _select(sc, args)
    k = _psi_degree(sc, chain)
    if k > sc.base_dim:
        raise ScenarioError("$.polynomial", f"psi degree {k} cannot be paired on T^{sc.base_dim}")
    # a negative-degree psi is the zero form; it pairs to 0 with every cycle
    cycles = _cycles_for(sc, args, k) if k >= 0 else dict(sorted(sc.cycles.items()))
    _gate(sc, chain, args, rep)
    if not _preconditions(rep, chain, ref, sc.connections):
        return rep.finish(chain=name, reference=ref.id)
    form = psi(chain, ref, sc.polynomial, sc.connections).form
    if k < 0:
        rep.check("p_lt_r_zero", "p_lt_r", form.is_zero())
    values = {}
    for cname, z in cycles.items():
        v = pair(form, z) if k >= 0 else RZValue.zero()
        total = pair_total(chain, ref, sc.polynomial, z, sc.connections)
        rep.check(f"fubini:{cname}", "fubini", v == total, exact_value=total.exact_str(), float_value=total.value)
        values[cname] = {"cycle": str(z), **rz_to_json(v)}
    golden = Path(args.golden) if args.golden else sc.golden_path()
    default_setup = name == sc.chain(None)[0] and ref.id == sc.reference
    if golden is not None and golden.exists() and default_setup:
        for rec in load_golden(golden):
            if rec.scenario != sc.id or not rec.quantity.startswith("pair:"):
                continue
            cname = rec.quantity.split(":", 1)[1]
            if cname not in values:
                continue
            exact = values[cname]["float"]
            rep.check(f"golden:{rec.quantity}:{rec.method}", "golden", rec.accepts(exact), tolerance=rec.tolerance,
                      exact_value=values[cname]["exact"], float_value=rec.value)
    if args.oracle and k >= 0:
        for cname, z in cycles.items():
            exact = values[cname]["float"]
            grid = oracle_pair(chain, ref, sc.polynomial, sc.connections, z, QuadratureSpec(points=8, gauss_points=6))
            rep.check(f"oracle:{cname}:tensor_grid", "oracle", abs(grid.value - exact) <= 1e-6, tolerance=1e-6,
                      float_value=grid.value, exact_value=values[cname]["exact"])
            mc = oracle_pair(chain, ref, sc.polynomial, sc.connections, z,
                             QuadratureSpec("monte_carlo", samples=args.samples, seed=args.seed))
            tol = max(3 * mc.error, 1e-9)
            rep.check(f"oracle:{cname}:monte_carlo", "oracle", abs(mc.value - exact) <= tol, tolerance=tol,
                      float_value=mc.value, exact_value=values[cname]["exact"], detail=f"seed {args.seed}")
    return rep.finish(chain=name, reference=ref.id, p=sc.polynomial.degree, r=chain.dim, result={"pairings": values})


def _stokes_checks(rep: Report, seed: int, m: int, count: int = 6):
    rng = random.Random(seed)
    mm = min(m, 3)
    fibers = [("simplex1", FiberSpec.simplex(1)), ("simplex2", FiberSpec.simplex(2)),
              ("simplex1_interval", FiberSpec.simplex_interval(1))]
    for label, fiber in fibers:
        params = list(fiber.t_vars) + list(fiber.s_vars)
        ok = True
        for _ in range(count):
            deg = rng.randint(fiber.dim, fiber.dim + 2)
            w = random_form(rng, mm, params, deg)
            if not stokes_check(w, fiber).is_zero():
                ok = False
        rep.check(f"stokes:{label}", "stokes", ok, detail=f"{count} random forms, seed {seed}")


def _family_checks(rep: Report, sc: Scenario, label: str, chain: Chain):
    p = sc.polynomial.degree
    for simplex, _ in chain.items():
        verts = [sc.connections[v] for v in simplex.vertices]
        fam = affine_family(verts)
        omega = curvature(fam)
        m = sc.base_dim
        expected = MatrixForm.zeros(fam.n, m)
        for j, v in enumerate(verts[1:], start=1):
            expected = expected + _dt_wedge(f"t{j}", v.one_form - verts[0].one_form)
        ok = (omega.bidegree_component(2, 0).is_zero() and omega.bidegree_component(0, 2).is_zero()
              and omega == expected)
        rep.check(f"bidegree:{label}:{simplex}", "bidegree", ok)
        if p > simplex.dim:
            rep.check(f"integrand_vanishing:{label}:{simplex}", "integrand_vanishing",
                      chern_weil(sc.polynomial, omega).is_zero())


def _dt_wedge(t: str, a: MatrixForm) -> MatrixForm:
    dt = Form.d(a.m, t)
    return a.map(lambda f: dt ^ f)


def cmd_properties(sc: Scenario, args) -> dict:
    rep = Report("properties", sc)
    name, chain, ref = _select(sc, args)
    _gate(sc, chain, args, rep)
    P, conns = sc.polynomial, sc.connections
    p, r = P.degree, chain.dim
    k = _psi_degree(sc, chain)
    _stokes_checks(rep, args.seed, sc.base_dim)
    _family_checks(rep, sc, name, chain)
    source = _boundary_source(sc, name)
    if source is not None:
        _family_checks(rep, sc, source, sc.chains[source])
    if not _preconditions(rep, chain, ref, conns):
        return rep.finish(chain=name, reference=ref.id, p=p, r=r)
    form = psi(chain, ref, P, conns).form
    if p != r:
        rep.check("closed", "closed", closedness_check(form))
    if p < r:
        rep.check("p_lt_r_zero", "p_lt_r", form.is_zero())
    cycles = subtorus_cycles(sc.base_dim, k) if 0 <= k <= sc.base_dim else []
    if source is not None and p != sc.chains[source].dim:
        eta = boundary_primitive(sc.chains[source], ref, P, conns)
        rep.check("boundary_exact", "boundary", form == eta.exterior_d())
        rep.check("boundary_pairings_zero", "boundary", all(pair(form, z) == RZValue.zero() for z in cycles))
        if not form.is_zero():
            rep.warn("psi of the boundary chain is exact but not identically zero")
    if sc.constant_gauge is not None:
        g = sc.gauges[sc.constant_gauge]
        moved = {cid: gauge_apply(c, g, cid) for cid, c in conns.items()}
        form_g = psi(chain, moved[ref.id], P, moved).form
        rep.check(f"gauge_invariance:{sc.constant_gauge}", "gauge", form_g == form)
    if sc.gauge is not None:
        g = sc.gauges[sc.gauge]
        ok = all(is_flat(gauge_apply(c, g, cid)) for cid, c in conns.items() if is_flat(c))
        rep.check(f"gauge_flatness:{sc.gauge}", "gauge_flatness", ok)
    if not noninvariance_warning(p, r) and cycles:
        for alt in sc.alternate_references:
            diffs = psi_compare_reference(chain, ref, conns[alt], P, cycles, conns)
            rep.check(f"reference_independence:{ref.id}-{alt}", "reference", all(d.is_integer() for d in diffs),
                      exact_value=[d.exact_str() for d in diffs], detail=f"{len(cycles)} subtorus cycles")
    fub = list(sc.cycles.values()) if any(z.dim == k for z in sc.cycles.values()) else cycles[:2]
    for z in fub:
        if z.dim != k:
            continue
        rep.check(f"fubini:{z}", "fubini", pair(form, z) == pair_total(chain, ref, P, z, conns))
    target = sorted(chain.vertex_ids())[0] if chain.vertex_ids() else None
    if target is not None:
        tr = transgression(P, ref, conns[target])
        lhs = tr.exterior_d()
        rhs = chern_weil(P, curvature(conns[target].one_form)) - chern_weil(P, curvature(ref.one_form))
        rep.check(f"homotopy:{ref.id}->{target}", "homotopy", lhs == rhs)
    return rep.finish(chain=name, reference=ref.id, p=p, r=r, result={"psi": form_to_json(form)})


def cmd_transgression(sc: Scenario, args) -> dict:
    rep = Report("transgression", sc)
    d0 = sc.connection(args.reference or sc.reference, "--reference")
    if args.to:
        d1 = sc.connection(args.to, "--to")
    else:
        _, chain = sc.chain(args.chain)
        d1 = sc.connections[sorted(chain.vertex_ids())[0]]
    P = sc.polynomial
    tr = transgression(P, d0, d1)
    rhs = chern_weil(P, curvature(d1.one_form)) - chern_weil(P, curvature(d0.one_form))
    rep.check(f"homotopy:{d0.id}->{d1.id}", "homotopy", tr.exterior_d() == rhs)
    return rep.finish(reference=d0.id, to=d1.id, result={"form": form_to_json(tr)})


def cmd_golden(sc: Scenario, args) -> dict:
    from .oracle import QuadratureSpec, dump_golden, make_golden

    grid = QuadratureSpec(points=12, gauss_points=6)
    mc = QuadratureSpec("monte_carlo", samples=args.samples, seed=args.seed)
    records = make_golden(sc, grid, mc, mc_point_samples=args.samples)
    text = dump_golden(records, {"grid_points": 12, "gauss_points": 6, "mc_samples": args.samples,
                                 "mc_point_samples": args.samples})
    if args.golden:
        Path(args.golden).write_text(text)
    return {"command": "golden", "scenario": sc.id, "status": "pass", "checks": [], "warnings": [],
            "result": json.loads(text)}


COMMANDS = {
    "validate": cmd_validate,
    "psi": cmd_psi,
    "pair": cmd_pair,
    "properties": cmd_properties,
    "transgression": cmd_transgression,
    "golden": cmd_golden,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flatpsi", description="Secondary invariants of flat connection families.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--scenario", required=True, help="scenario JSON file")
        sp.add_argument("--chain", help="chain name (default: the scenario's default chain)")
        sp.add_argument("--cycle", help="base cycle name (pair only; default: all of matching dimension)")
        sp.add_argument("--reference", help="reference connection id (transgression: the start)")
        sp.add_argument("--to", help="end connection id for transgression")
        sp.add_argument("--out", help="write the JSON report here instead of stdout")
        sp.add_argument("--allow-noninvariant", action="store_true", help="compute even when p is r or r+1")
        sp.add_argument("--oracle", action="store_true", help="run numerical cross-checks as well")
        sp.add_argument("--seed", type=int, default=42, help="seed for randomized checks and Monte Carlo")
        sp.add_argument("--samples", type=int, default=20_000, help="Monte Carlo samples for --oracle / golden")
        sp.add_argument("--golden", help="golden file (pair: compare; golden: write)")
    return parser


def _emit(report: dict, out: str | None):
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _error(code: int, kind: str, message: str, path: str | None = None) -> int:
    body = {"status": "error", "error": kind, "message": message, "exit_code": code}
    if path is not None:
        body["path"] = path
    sys.stderr.write(json.dumps(body, sort_keys=True) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.ERROR)
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.scenario)
        report = COMMANDS[args.command](sc, args)
    except ScenarioParseError as exc:
        return _error(EXIT_PARSE, "parse", str(exc))
    except ScenarioError as exc:
        return _error(EXIT_SEMANTIC, "validation", exc.message, exc.path)
    except Refused as exc:
        return _error(EXIT_NONINVARIANT, "noninvariant", str(exc))
    _emit(report, args.out)
    return EXIT_OK if report["status"] == "pass" else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
