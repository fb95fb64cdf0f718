"""Model file format: parsing, canonical serialization, and the JSON codecs
for reduction maps and solver output.

The grammar is line-oriented with ``#`` comments:

    domain Person = {alice, bob, carol}     # or: domain Person = 3
    predicate smokes(Person) range 2
    parfactor {
      vars: X:Person, Y:Person
      constraint: X != Y, X != alice        # optional
      atoms: smokes(X), drinks(Y), friends(X, Y)
      table: [0.2, 0.8, 0.5, 0.5, 0.9, 0.1, 0.3, 0.7]
    }

Tables hold linear weights in row-major order, first atom most significant;
``exp(x)`` literals cover magnitudes outside double range. Weights are stored
in natural-log space internally.
"""

from __future__ import annotations

import json
import math
import re

import numpy as np

from .core import (
    Atom,
    Const,
    Constraint,
    Domain,
    GroundAtom,
    Model,
    Parfactor,
    PotentialTable,
    Predicate,
    Var,
)
from .errors import ParseError
from .reduction import ParfactorReduction, PredicateReduction, ReductionMap
from .shattering import ShatterMap
from .symbolic import AnchoredFormula

_IDENT = r"[A-Za-z_][A-Za-z0-9_'′]*"
_IDENT_RE = re.compile(_IDENT)
_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_DOMAIN_RE = re.compile(rf"^domain\s+({_IDENT})\s*=\s*(?:\{{(.*)\}}|(\d+))\s*$")
_PRED_RE = re.compile(rf"^predicate\s+({_IDENT})\s*\(([^()]*)\)\s+range\s+(\d+)\s*$")
_EXP_RE = re.compile(rf"^exp\(\s*({_NUMBER})\s*\)$")


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


class _Parser:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.domains: dict = {}
        self.predicates: dict = {}
        self.parfactors: list = []

    def err(self, msg: str, lineno: int, col: int = 1):
        raise ParseError(msg, lineno, col)

    def parse(self) -> Model:
        i = 0
        n = len(self.lines)
        while i < n:
            lineno = i + 1
            line = _strip_comment(self.lines[i]).strip()
            i += 1
            if not line:
                continue
            if line.startswith("domain"):
                self._domain(line, lineno)
            elif line.startswith("predicate"):
                self._predicate(line, lineno)
            elif re.fullmatch(r"parfactor\s*\{", line):
                i = self._parfactor(i, lineno)
            else:
                word = line.split()[0]
                self.err(f"expected 'domain', 'predicate' or 'parfactor', got {word!r}", lineno)
        return Model(
            tuple(self.domains.values()),
            tuple(self.predicates.values()),
            tuple(self.parfactors),
        )

    def _domain(self, line: str, lineno: int):
        m = _DOMAIN_RE.match(line)
        if not m:
            self.err("malformed domain declaration", lineno)
        name, consts, size = m.groups()
        if name in self.domains:
            self.err(f"duplicate domain {name!r}", lineno)
        if size is not None:
            self.domains[name] = Domain(name, int(size))
            return
        names = [c.strip() for c in consts.split(",")] if consts.strip() else []
        if not names or any(not _IDENT_RE.fullmatch(c) for c in names):
            self.err("malformed constant list", lineno)
        if len(set(names)) != len(names):
            self.err(f"duplicate constants in domain {name!r}", lineno)
        self.domains[name] = Domain.named(name, names)

    def _predicate(self, line: str, lineno: int):
        m = _PRED_RE.match(line)
        if not m:
            self.err("malformed predicate declaration", lineno)
        name, args, rng = m.groups()
        if name in self.predicates:
            self.err(f"duplicate predicate {name!r}", lineno)
        doms = []
        if args.strip():
            for part in args.split(","):
                dname = part.strip()
                if dname not in self.domains:
                    self.err(f"unknown domain {dname!r}", lineno, line.find(dname) + 1)
                doms.append(self.domains[dname])
        if int(rng) < 2:
            self.err(f"predicate {name!r}: range must be >= 2", lineno)
        self.predicates[name] = Predicate(name, tuple(doms), int(rng))

    def _parfactor(self, i: int, start_line: int) -> int:
        fields: dict = {}
        while True:
            if i >= len(self.lines):
                self.err("unterminated parfactor block", start_line)
            lineno = i + 1
            line = _strip_comment(self.lines[i]).strip()
            i += 1
            if not line:
                continue
            if line == "}":
                break
            key, sep, rest = line.partition(":")
            key = key.strip()
            if not sep or key not in ("vars", "constraint", "atoms", "table"):
                self.err("expected 'vars:', 'constraint:', 'atoms:', 'table:' or '}'", lineno)
            if key in fields:
                self.err(f"duplicate {key!r} line in parfactor", lineno)
            fields[key] = (rest.strip(), lineno)
        if "atoms" not in fields:
            self.err("parfactor needs an 'atoms:' line", start_line)
        if "table" not in fields:
            self.err("parfactor needs a 'table:' line", start_line)

        variables: dict = {}
        if "vars" in fields:
            text, lineno = fields["vars"]
            for part in _split_commas(text):
                if not part:
                    continue
                vname, sep, dname = part.partition(":")
                vname, dname = vname.strip(), dname.strip()
                if not sep or not _IDENT_RE.fullmatch(vname) or not dname:
                    self.err(f"malformed variable declaration {part!r}", lineno)
                if dname not in self.domains:
                    self.err(f"unknown domain {dname!r}", lineno)
                if vname in variables:
                    self.err(f"duplicate variable {vname!r}", lineno)
                variables[vname] = Var(vname, self.domains[dname])

        atoms = []
        text, atoms_line = fields["atoms"]
        for part in _split_commas_outside_parens(text):
            atoms.append(self._atom(part, variables, atoms_line))
        if not atoms:
            self.err("parfactor needs at least one atom", atoms_line)

        constraint = Constraint.EMPTY
        if "constraint" in fields:
            text, lineno = fields["constraint"]
            pairs = []
            for part in _split_commas(text):
                if not part:
                    continue
                sides = part.split("!=")
                if len(sides) != 2:
                    self.err(f"malformed disequality {part!r}", lineno)
                pairs.append(self._diseq(sides[0].strip(), sides[1].strip(), variables, lineno))
            constraint = Constraint.of(*pairs)

        text, lineno = fields["table"]
        if not (text.startswith("[") and text.endswith("]")):
            self.err("table must be a [...] list", lineno)
        entries = []
        body = text[1:-1].strip()
        for part in _split_commas_outside_parens(body) if body else []:
            entries.append(self._weight(part, lineno))
        expected = math.prod(a.pred.range_size for a in atoms)
        if len(entries) != expected:
            ranges = "*".join(str(a.pred.range_size) for a in atoms)
            self.err(
                f"table has {len(entries)} entries, expected {expected} (product of ranges {ranges})",
                lineno,
            )
        axes = tuple(a.pred.range_size for a in atoms)
        table = PotentialTable(np.array(entries).reshape(axes))
        self.parfactors.append(
            Parfactor(tuple(variables.values()), constraint, tuple(atoms), table)
        )
        return i

    def _atom(self, text: str, variables: dict, lineno: int) -> Atom:
        m = re.fullmatch(rf"({_IDENT})\s*(?:\(([^()]*)\))?", text)
        if not m:
            self.err(f"malformed atom {text!r}", lineno)
        name, args = m.groups()
        if name not in self.predicates:
            self.err(f"unknown predicate {name!r}", lineno)
        pred = self.predicates[name]
        parts = [p.strip() for p in args.split(",")] if args and args.strip() else []
        if len(parts) != pred.arity:
            self.err(
                f"atom {name!r} has {len(parts)} arguments, predicate has arity {pred.arity}",
                lineno,
            )
        terms = []
        for pos, token in enumerate(parts):
            terms.append(self._term(token, pred.domains[pos], variables, lineno))
        return Atom(pred, tuple(terms))

    def _term(self, token: str, expected_domain: Domain, variables: dict, lineno: int):
        if token in variables:
            return variables[token]
        idx = expected_domain.constant_index(token)
        if idx is not None:
            return Const(expected_domain, idx)
        self.err(
            f"{token!r} is neither a declared variable nor a constant of {expected_domain.name}",
            lineno,
        )

    def _diseq(self, left: str, right: str, variables: dict, lineno: int):
        if left in variables:
            lv = variables[left]
            if right in variables:
                return (lv, variables[right])
            idx = lv.domain.constant_index(right)
            if idx is None:
                self.err(f"{right!r} is not a constant of {lv.domain.name}", lineno)
            return (lv, Const(lv.domain, idx))
        if right in variables:
            return self._diseq(right, left, variables, lineno)
        self.err(f"disequality {left!r} != {right!r} mentions no declared variable", lineno)

    def _weight(self, token: str, lineno: int) -> float:
        m = _EXP_RE.match(token)
        if m:
            return float(m.group(1))
        try:
            w = float(token)
        except ValueError:
            self.err(f"malformed weight {token!r}", lineno)
        if math.isnan(w) or math.isinf(w) or w < 0:
            self.err(f"weights must be finite and non-negative, got {token!r}", lineno)
        return math.log(w) if w > 0 else float("-inf")


def _split_commas(text: str) -> list:
    return [p.strip() for p in text.split(",")] if text.strip() else []


def _split_commas_outside_parens(text: str) -> list:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail:
        parts.append(tail)
    return [p for p in parts if p != ""]


def parse_model(text: str) -> Model:
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# serialization


_LINEAR_LOG_BOUND = 690.0  # beyond this exp() under/overflows doubles


def _format_weight(log_value: float) -> str:
    if log_value == float("-inf"):
        return "0"
    if abs(log_value) <= _LINEAR_LOG_BOUND:
        return f"{math.exp(log_value):.17g}"
    return f"exp({log_value:.17g})"


def serialize_model(m: Model) -> str:
    """Canonical text form: sorted declarations, parfactors in model order,
    17-significant-digit weights (exp() literals for extreme magnitudes)."""
    lines = ["# parfactor model"]
    for d in sorted(m.domains, key=lambda d: d.name):
        if d.names is None:
            lines.append(f"domain {d.name} = {d.size}")
        else:
            lines.append(f"domain {d.name} = {{{', '.join(d.names)}}}")
    for p in sorted(m.predicates, key=lambda p: p.name):
        args = ", ".join(dom.name for dom in p.domains)
        lines.append(f"predicate {p.name}({args}) range {p.range_size}")
    for g in m.parfactors:
        lines.append("parfactor {")
        if g.vars:
            decl = ", ".join(f"{v.name}:{v.domain.name}" for v in g.vars)
            lines.append(f"  vars: {decl}")
        if not g.constraint.is_empty:
            lines.append(f"  constraint: {g.constraint.render()}")
        body = ", ".join(_atom_text(a) for a in g.atoms)
        lines.append(f"  atoms: {body}")
        weights = ", ".join(_format_weight(v) for v in g.table.log_values.ravel())
        lines.append(f"  table: [{weights}]")
        lines.append("}")
    return "\n".join(lines) + "\n"


def _atom_text(a: Atom) -> str:
    return f"{a.pred.name}({', '.join(str(t) for t in a.terms)})"


# ---------------------------------------------------------------------------
# JSON codecs


def _term_json(t):
    if isinstance(t, Var):
        return {"var": t.name, "domain": t.domain.name}
    return {"const": t.name, "domain": t.domain.name}


def _constraint_json(c: Constraint) -> list:
    out = [[a.name, "var", b.name] for a, b in c.var_pairs]
    out += [[v.name, "const", k.name] for v, k in c.const_pairs]
    return sorted(out)


def reduction_map_to_json(rmap: ReductionMap, smap: ShatterMap | None = None) -> dict:
    data = {
        "schema": "uar-reduction-map/1",
        "renames": {
            fresh.name: orig.name for fresh, orig in (smap.renames if smap else {}).items()
        },
        "predicates": [
            {
                "original": pr.original.name,
                "reduced": pr.reduced.name,
                "kept_positions": list(pr.kept_positions),
                "removed_positions": list(pr.removed_positions),
                "cell": {
                    "terms": [_term_json(t) for t in pr.cell_atom.terms],
                    "constraint": _constraint_json(pr.cell_constraint),
                },
            }
            for pr in rmap.predicates
        ],
        "parfactors": [
            {
                "index": pf.parfactor_index,
                "pred": pf.formula.pred.name,
                "anchored": sorted(pf.formula.anchored),
                "exponent": pf.exponent,
                "removed_vars": list(pf.removed_vars),
            }
            for pf in rmap.parfactors
        ],
    }
    return data


def reduction_map_from_json(original: Model, reduced: Model, data: dict):
    """Rebuild (ReductionMap, ShatterMap) against parsed model objects."""
    smap = ShatterMap()
    shattered_preds: dict = {}
    for fresh_name, orig_name in data.get("renames", {}).items():
        orig = original.predicate(orig_name)
        fresh = Predicate(fresh_name, orig.domains, orig.range_size)
        smap.renames[fresh] = orig
        shattered_preds[fresh_name] = fresh

    def shattered_pred(name: str) -> Predicate:
        if name in shattered_preds:
            return shattered_preds[name]
        return original.predicate(name)

    def term_from(d: dict, variables: dict):
        dom = original.domain(d["domain"])
        if "var" in d:
            v = variables.get(d["var"]) or Var(d["var"], dom)
            variables[d["var"]] = v
            return v
        return Const(dom, dom.constant_index(d["const"]))

    preds = []
    for entry in data.get("predicates", []):
        orig = shattered_pred(entry["original"])
        reduced_pred = reduced.predicate(entry["reduced"])
        variables: dict = {}
        terms = tuple(term_from(t, variables) for t in entry["cell"]["terms"])
        pairs = []
        for a, kind, b in entry["cell"]["constraint"]:
            va = variables[a]
            if kind == "var":
                pairs.append((va, variables[b]))
            else:
                pairs.append((va, Const(va.domain, va.domain.constant_index(b))))
        preds.append(
            PredicateReduction(
                orig,
                reduced_pred,
                tuple(entry["kept_positions"]),
                tuple(entry["removed_positions"]),
                Atom(orig, terms),
                Constraint.of(*pairs),
            )
        )
    pfs = []
    for entry in data.get("parfactors", []):
        pred = shattered_pred(entry["pred"])
        pfs.append(
            ParfactorReduction(
                entry["index"],
                AnchoredFormula(pred, frozenset(entry["anchored"])),
                entry["exponent"],
                tuple(entry["removed_vars"]),
            )
        )
    return ReductionMap(tuple(preds), tuple(pfs)), smap


def result_to_json(result) -> dict:
    """Solver output: ground assignment plus the uniform blocks."""
    assignment = {
        str(ga): v
        for ga, v in sorted(result.assignment.items(), key=lambda kv: kv[0].sort_key())
    }
    lifted = [
        {
            "pred": b.pred,
            "kept_positions": list(b.kept_positions),
            "blocks": {f"({', '.join(names)})": v for names, v in b.blocks.items()},
        }
        for b in result.lifted
    ]
    return {
        "log_weight": result.log_weight,
        "engine": result.engine,
        "assignment": assignment,
        "lifted": lifted,
        "stats": {
            "detect_ms": result.stats.detect_s * 1e3,
            "reduce_ms": result.stats.reduce_s * 1e3,
            "solve_ms": result.stats.solve_s * 1e3,
            "total_ms": result.stats.elapsed_s * 1e3,
        },
    }


def dumps_json(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=False) + "\n"
