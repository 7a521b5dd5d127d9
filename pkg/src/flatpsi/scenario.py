"""Scenario files: JSON schema, validation with field paths, canonical dump."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from .chernweil import Connection, GaugeTransform, InvariantPolynomial, gauge_apply, is_flat
from .families import Chain, Simplex, boundary
from .forms import MatrixForm
from .pairing import BaseCycle
from .scalars import COS, SIN, Scalar


class ScenarioParseError(ValueError):
    """The file is not valid JSON (exit code 2)."""


class ScenarioError(ValueError):
    """Semantic validation failure at a JSON field path (exit code 3)."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


@dataclass
class ConnectionSpec:
    components: dict[str, list[list[Scalar]]]
    gauge: str | None = None


@dataclass
class ChainSpec:
    terms: list[tuple[tuple[str, ...], int]] = field(default_factory=list)
    boundary_of: str | None = None
    cycle: bool = True


@dataclass
class Scenario:
    id: str
    base_dim: int
    rank: int
    polynomial: InvariantPolynomial
    connection_specs: dict[str, ConnectionSpec]
    chain_specs: dict[str, ChainSpec]
    reference: str
    cycles: dict[str, BaseCycle] = field(default_factory=dict)
    gauges: dict[str, GaugeTransform] = field(default_factory=dict)
    gauge: str | None = None
    constant_gauge: str | None = None
    alternate_references: list[str] = field(default_factory=list)
    default_chain: str | None = None
    golden: str | None = None
    description: str = ""
    source: Path | None = None
    connections: dict[str, Connection] = field(default_factory=dict)
    chains: dict[str, Chain] = field(default_factory=dict)

    def chain(self, name: str | None) -> tuple[str, Chain]:
        name = name or self.default_chain
        if name is None:
            cyc = [n for n, c in sorted(self.chain_specs.items()) if c.cycle]
            if not cyc:
                raise ScenarioError("$.chains", "no cycle chain; pass --chain")
            name = cyc[0]
        if name not in self.chains:
            raise ScenarioError(f"$.chains.{name}", "no such chain")
        return name, self.chains[name]

    def connection(self, cid: str, path: str = "--reference") -> Connection:
        if cid not in self.connections:
            raise ScenarioError(path, f"unknown connection {cid!r}")
        return self.connections[cid]

    def golden_path(self) -> Path | None:
        if self.golden is None:
            return None
        p = Path(self.golden)
        if not p.is_absolute() and self.source is not None:
            p = self.source.parent / p
        return p


# -- parsing helpers -----------------------------------------------------

def _rational(value: Any, path: str) -> Fraction:
    if isinstance(value, bool):
        raise ScenarioError(path, "expected a rational, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ScenarioError(path, f"not a rational string: {value!r}") from None
    raise ScenarioError(path, f"expected a rational string like \"p/q\", got {value!r}")


def _int(value: Any, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ScenarioError(path, f"must be >= {minimum}")
    return value


def _obj(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise ScenarioError(path, "expected an object")
    return value


def _list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise ScenarioError(path, "expected a list")
    return value


def _scalar(value: Any, m: int, path: str) -> Scalar:
    """A rational constant or a list of trig terms {freq, phase, coeff, tau_pow}."""
    if not isinstance(value, list):
        return Scalar.const(m, _rational(value, path))
    out = Scalar.zero(m)
    for i, term in enumerate(value):
        tp = f"{path}[{i}]"
        term = _obj(term, tp)
        unknown = set(term) - {"freq", "phase", "coeff", "tau_pow"}
        if unknown:
            raise ScenarioError(tp, f"unknown keys {sorted(unknown)}")
        freq = _list(term.get("freq", [0] * m), f"{tp}.freq")
        if len(freq) != m:
            raise ScenarioError(f"{tp}.freq", f"needs {m} entries")
        freq = tuple(_int(k, f"{tp}.freq[{j}]") for j, k in enumerate(freq))
        phase = term.get("phase", COS)
        if phase not in (COS, SIN):
            raise ScenarioError(f"{tp}.phase", "must be \"cos\" or \"sin\"")
        if phase == SIN and not any(freq):
            raise ScenarioError(f"{tp}.phase", "sin needs a nonzero frequency")
        coeff = _rational(term.get("coeff", "1"), f"{tp}.coeff")
        tau_pow = _int(term.get("tau_pow", 0), f"{tp}.tau_pow", 0)
        out = out + Scalar.trig(m, freq, phase, coeff, tau_pow)
    return out


def _matrix(value: Any, n: int, m: int, path: str) -> list[list[Scalar]]:
    rows = _list(value, path)
    if len(rows) != n:
        raise ScenarioError(path, f"expected {n} rows")
    out = []
    for i, row in enumerate(rows):
        row = _list(row, f"{path}[{i}]")
        if len(row) != n:
            raise ScenarioError(f"{path}[{i}]", f"expected {n} entries")
        out.append([_scalar(e, m, f"{path}[{i}][{j}]") for j, e in enumerate(row)])
    return out


def _direction(name: str, m: int, path: str) -> int:
    if not (isinstance(name, str) and name.startswith("x") and name[1:].isdigit()):
        raise ScenarioError(path, f"direction must be x1..x{m}, got {name!r}")
    a = int(name[1:])
    if not 1 <= a <= m:
        raise ScenarioError(path, f"direction {name} outside base dimension {m}")
    return a


KNOWN_KEYS = {
    "id", "description", "base_dim", "rank", "polynomial", "connections", "reference",
    "alternate_references", "chains", "default_chain", "cycles", "gauges", "gauge",
    "constant_gauge", "golden",
}


def parse_scenario(raw: Any, source: Path | None = None) -> Scenario:
    raw = _obj(raw, "$")
    unknown = set(raw) - KNOWN_KEYS
    if unknown:
        raise ScenarioError("$", f"unknown keys {sorted(unknown)}")
    for key in ("id", "base_dim", "rank", "polynomial", "connections", "reference", "chains"):
        if key not in raw:
            raise ScenarioError(f"$.{key}", "missing")
    sid = raw["id"]
    if not isinstance(sid, str) or not sid:
        raise ScenarioError("$.id", "expected a non-empty string")
    m = _int(raw["base_dim"], "$.base_dim", 1)
    n = _int(raw["rank"], "$.rank", 1)
    factors = _list(raw["polynomial"], "$.polynomial")
    if not factors:
        raise ScenarioError("$.polynomial", "needs at least one factor")
    poly = InvariantPolynomial([_int(f, f"$.polynomial[{i}]", 1) for i, f in enumerate(factors)])

    gauges: dict[str, GaugeTransform] = {}
    for name, spec in sorted(_obj(raw.get("gauges", {}), "$.gauges").items()):
        gp = f"$.gauges.{name}"
        spec = _obj(spec, gp)
        for key in ("g", "g_inv"):
            if key not in spec:
                raise ScenarioError(f"{gp}.{key}", "missing")
        g = _matrix(spec["g"], n, m, f"{gp}.g")
        gi = _matrix(spec["g_inv"], n, m, f"{gp}.g_inv")
        try:
            gauges[name] = GaugeTransform(g, gi)
        except ValueError as exc:
            raise ScenarioError(gp, str(exc)) from None
    for key in ("gauge", "constant_gauge"):
        if raw.get(key) is not None and raw[key] not in gauges:
            raise ScenarioError(f"$.{key}", f"unknown gauge {raw[key]!r}")
    if raw.get("constant_gauge") is not None and not gauges[raw["constant_gauge"]].is_constant():
        raise ScenarioError("$.constant_gauge", "gauge is not constant")

    conn_specs: dict[str, ConnectionSpec] = {}
    connections: dict[str, Connection] = {}
    for cid, spec in sorted(_obj(raw["connections"], "$.connections").items()):
        cp = f"$.connections.{cid}"
        spec = _obj(spec, cp)
        unknown = set(spec) - {"components", "gauge"}
        if unknown:
            raise ScenarioError(cp, f"unknown keys {sorted(unknown)}")
        comps = {}
        for d, mat in sorted(_obj(spec.get("components", {}), f"{cp}.components").items()):
            _direction(d, m, f"{cp}.components.{d}")
            comps[d] = _matrix(mat, n, m, f"{cp}.components.{d}")
        gname = spec.get("gauge")
        if gname is not None and gname not in gauges:
            raise ScenarioError(f"{cp}.gauge", f"unknown gauge {gname!r}")
        conn_specs[cid] = ConnectionSpec(comps, gname)
        conn = Connection(cid, MatrixForm.from_components(n, m, comps))
        if gname is not None:
            conn = gauge_apply(conn, gauges[gname], cid)
        connections[cid] = conn

    ref = raw["reference"]
    if ref not in connections:
        raise ScenarioError("$.reference", f"unknown connection {ref!r}")
    alts = _list(raw.get("alternate_references", []), "$.alternate_references")
    for i, a in enumerate(alts):
        if a not in connections:
            raise ScenarioError(f"$.alternate_references[{i}]", f"unknown connection {a!r}")

    chain_specs: dict[str, ChainSpec] = {}
    raw_chains = _obj(raw["chains"], "$.chains")
    for name, spec in sorted(raw_chains.items()):
        cp = f"$.chains.{name}"
        spec = _obj(spec, cp)
        unknown = set(spec) - {"terms", "boundary_of", "cycle"}
        if unknown:
            raise ScenarioError(cp, f"unknown keys {sorted(unknown)}")
        is_cycle_flag = spec.get("cycle", True)
        if not isinstance(is_cycle_flag, bool):
            raise ScenarioError(f"{cp}.cycle", "expected a boolean")
        if ("terms" in spec) == ("boundary_of" in spec):
            raise ScenarioError(cp, "give exactly one of \"terms\" and \"boundary_of\"")
        if "boundary_of" in spec:
            target = spec["boundary_of"]
            if target not in raw_chains or target == name:
                raise ScenarioError(f"{cp}.boundary_of", f"unknown chain {target!r}")
            chain_specs[name] = ChainSpec(boundary_of=target, cycle=is_cycle_flag)
            continue
        terms = []
        dim = None
        for i, t in enumerate(_list(spec["terms"], f"{cp}.terms")):
            tp = f"{cp}.terms[{i}]"
            t = _obj(t, tp)
            verts = _list(t.get("simplex"), f"{tp}.simplex")
            if not verts:
                raise ScenarioError(f"{tp}.simplex", "empty simplex")
            for j, v in enumerate(verts):
                if v not in connections:
                    raise ScenarioError(f"{tp}.simplex[{j}]", f"unknown connection {v!r}")
            if dim is None:
                dim = len(verts) - 1
            elif len(verts) - 1 != dim:
                raise ScenarioError(f"{tp}.simplex", f"dimension {len(verts) - 1} differs from {dim}")
            terms.append((tuple(verts), _int(t.get("coeff", 1), f"{tp}.coeff")))
        chain_specs[name] = ChainSpec(terms=terms, cycle=is_cycle_flag)

    chains: dict[str, Chain] = {}

    def build(name: str, seen: tuple = ()) -> Chain:
        if name in chains:
            return chains[name]
        if name in seen:
            raise ScenarioError(f"$.chains.{name}.boundary_of", "circular boundary reference")
        spec = chain_specs[name]
        if spec.boundary_of is not None:
            inner = build(spec.boundary_of, seen + (name,))
            if inner.dim < 1:
                raise ScenarioError(f"$.chains.{name}.boundary_of", "boundary of a 0-chain")
            chains[name] = boundary(inner)
        else:
            chains[name] = Chain([(Simplex(v), c) for v, c in spec.terms])
        return chains[name]

    for name in sorted(chain_specs):
        build(name)
    default_chain = raw.get("default_chain")
    if default_chain is not None and default_chain not in chains:
        raise ScenarioError("$.default_chain", f"unknown chain {default_chain!r}")

    cycles: dict[str, BaseCycle] = {}
    for name, spec in sorted(_obj(raw.get("cycles", {}), "$.cycles").items()):
        cp = f"$.cycles.{name}"
        spec = _obj(spec, cp)
        dirs = [_int(d, f"{cp}.directions[{i}]", 1) for i, d in enumerate(_list(spec.get("directions"), f"{cp}.directions"))]
        for i, d in enumerate(dirs):
            if d > m:
                raise ScenarioError(f"{cp}.directions[{i}]", f"x{d} outside base dimension {m}")
        offsets = {}
        for key, v in sorted(_obj(spec.get("offsets", {}), f"{cp}.offsets").items()):
            if not key.isdigit() or not 1 <= int(key) <= m:
                raise ScenarioError(f"{cp}.offsets.{key}", "offset keys are coordinate indices 1..m")
            offsets[int(key)] = _rational(v, f"{cp}.offsets.{key}")
        try:
            cycles[name] = BaseCycle(dirs, offsets, _int(spec.get("multiplicity", 1), f"{cp}.multiplicity"))
        except ValueError as exc:
            raise ScenarioError(cp, str(exc)) from None

    golden = raw.get("golden")
    if golden is not None and not isinstance(golden, str):
        raise ScenarioError("$.golden", "expected a path string")
    desc = raw.get("description", "")
    if not isinstance(desc, str):
        raise ScenarioError("$.description", "expected a string")

    return Scenario(
        id=sid, base_dim=m, rank=n, polynomial=poly, connection_specs=conn_specs, chain_specs=chain_specs,
        reference=ref, cycles=cycles, gauges=gauges, gauge=raw.get("gauge"),
        constant_gauge=raw.get("constant_gauge"), alternate_references=list(alts),
        default_chain=default_chain, golden=golden, description=desc, source=source,
        connections=connections, chains=chains,
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read {path}: {exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}: {exc}") from None
    return parse_scenario(raw, source=path)


# -- canonical dump ----------------------------------------------------------

def scalar_to_json(c: Scalar):
    if c.is_zero():
        return "0"
    if c.is_constant() and all(k[3] == 0 for k, _ in c.items()):
        return str(c.constant_value())
    out = []
    for (freq, phase, mono, tau), v in sorted(c.items(), key=lambda kv: (kv[0][3], kv[0][0], kv[0][1])):
        if mono:
            raise ValueError("scenario scalars cannot depend on parameters")
        out.append({"coeff": str(v), "freq": list(freq), "phase": phase, "tau_pow": tau})
    return out


def _matrix_to_json(mat) -> list:
    return [[scalar_to_json(e) for e in row] for row in mat]


def scenario_to_dict(sc: Scenario) -> dict:
    out: dict[str, Any] = {
        "id": sc.id,
        "base_dim": sc.base_dim,
        "rank": sc.rank,
        "polynomial": list(sc.polynomial.factors),
        "reference": sc.reference,
        "connections": {},
        "chains": {},
    }
    if sc.description:
        out["description"] = sc.description
    for cid, spec in sorted(sc.connection_specs.items()):
        entry: dict[str, Any] = {"components": {d: _matrix_to_json(mat) for d, mat in sorted(spec.components.items())}}
        if spec.gauge is not None:
            entry["gauge"] = spec.gauge
        out["connections"][cid] = entry
    for name, spec in sorted(sc.chain_specs.items()):
        if spec.boundary_of is not None:
            entry = {"boundary_of": spec.boundary_of}
        else:
            entry = {"terms": [{"simplex": list(v), "coeff": c} for v, c in spec.terms]}
        if not spec.cycle:
            entry["cycle"] = False
        out["chains"][name] = entry
    if sc.alternate_references:
        out["alternate_references"] = list(sc.alternate_references)
    if sc.default_chain is not None:
        out["default_chain"] = sc.default_chain
    if sc.cycles:
        out["cycles"] = {}
        for name, z in sorted(sc.cycles.items()):
            entry = {"directions": list(z.directions)}
            if z.offsets:
                entry["offsets"] = {str(a): str(v) for a, v in z.offsets}
            if z.multiplicity != 1:
                entry["multiplicity"] = z.multiplicity
            out["cycles"][name] = entry
    if sc.gauges:
        out["gauges"] = {
            name: {"g": _matrix_to_json(g.g), "g_inv": _matrix_to_json(g.g_inv)} for name, g in sorted(sc.gauges.items())
        }
    if sc.gauge is not None:
        out["gauge"] = sc.gauge
    if sc.constant_gauge is not None:
        out["constant_gauge"] = sc.constant_gauge
    if sc.golden is not None:
        out["golden"] = sc.golden
    return out


def dump_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2, sort_keys=True) + "\n"


def flat_connections(sc: Scenario) -> dict[str, bool]:
    return {cid: is_flat(c) for cid, c in sorted(sc.connections.items())}


def data_path(name: str) -> Path:
    """Path of a scenario or golden file shipped with the package."""
    return Path(__file__).resolve().parent / "data" / name
