"""Parfactor model core.

Domains, predicates, atoms, disequality constraints, substitutions and
log-space potential tables, plus the basic symbolic operations: substitution
application, constraint projection and exact grounding counts.

All values are immutable after construction and every operation is a pure
function, so models can be shared freely between threads.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import NonNormalForm

# ---------------------------------------------------------------------------
# symbols


@dataclass(frozen=True)
class Domain:
    """A finite, ordered set of constants.

    When ``names`` is None the constants are auto-named ``<name><i>`` (1-based,
    lowercase) and never materialized, so domains of size 10**6 stay cheap.
    """

    name: str
    size: int
    names: tuple[str, ...] | None = field(default=None, hash=False)

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"domain {self.name}: size must be >= 1")
        if self.names is not None:
            if len(self.names) != self.size:
                raise ValueError(
                    f"domain {self.name}: {len(self.names)} names for size {self.size}"
                )
            if len(set(self.names)) != self.size:
                raise ValueError(f"domain {self.name}: duplicate constant names")

    @classmethod
    def named(cls, name: str, constants: tuple[str, ...] | list[str]) -> "Domain":
        return cls(name, len(constants), tuple(constants))

    def constant_name(self, index: int) -> str:
        if not 0 <= index < self.size:
            raise IndexError(f"{self.name}[{index}]")
        if self.names is not None:
            return self.names[index]
        return f"{self.name.lower()}{index + 1}"

    def constant_index(self, name: str) -> int | None:
        """Index of a constant by name, or None if unknown."""
        if self.names is None:
            m = re.fullmatch(re.escape(self.name.lower()) + r"([1-9][0-9]*)", name)
            if m is None:
                return None
            i = int(m.group(1)) - 1
            return i if i < self.size else None
        lookup = self.__dict__.get("_lookup")
        if lookup is None:
            lookup = {n: i for i, n in enumerate(self.names)}
            object.__setattr__(self, "_lookup", lookup)
        return lookup.get(name)

    def __repr__(self):
        return f"Domain({self.name}, |{self.size}|)"


@dataclass(frozen=True)
class Const:
    """An interned constant: an index into its domain."""

    domain: Domain
    index: int

    @property
    def name(self) -> str:
        return self.domain.constant_name(self.index)

    def __str__(self):
        return self.name

    def __repr__(self):
        return f"Const({self.domain.name}.{self.name})"


@dataclass(frozen=True)
class Var:
    """A logical variable, typed by its domain."""

    name: str
    domain: Domain

    def __str__(self):
        return self.name

    def __repr__(self):
        return f"Var({self.name}:{self.domain.name})"


Term = Var | Const


def _var_key(v: Var) -> tuple[str, str]:
    return (v.name, v.domain.name)


@dataclass(frozen=True)
class Predicate:
    name: str
    domains: tuple[Domain, ...]
    range_size: int

    @property
    def arity(self) -> int:
        return len(self.domains)

    def __repr__(self):
        return f"Predicate({self.name}/{self.arity})"


@dataclass(frozen=True)
class Atom:
    pred: Predicate
    terms: tuple[Term, ...]

    def variables(self) -> tuple[Var, ...]:
        """Distinct logical variables in first-occurrence order."""
        seen: list[Var] = []
        for t in self.terms:
            if isinstance(t, Var) and t not in seen:
                seen.append(t)
        return tuple(seen)

    def __str__(self):
        if not self.terms:
            return self.pred.name
        return f"{self.pred.name}({', '.join(str(t) for t in self.terms)})"


@dataclass(frozen=True)
class GroundAtom:
    """A fully instantiated atom; the model's random variables."""

    pred: Predicate
    args: tuple[int, ...]

    def sort_key(self) -> tuple[str, tuple[int, ...]]:
        return (self.pred.name, self.args)

    def __str__(self):
        names = ", ".join(self.pred.domains[i].constant_name(a) for i, a in enumerate(self.args))
        return f"{self.pred.name}({names})"


def logical_vars(atoms) -> tuple[Var, ...]:
    """Distinct logical variables of a sequence of atoms, first occurrence order."""
    seen: list[Var] = []
    for a in atoms:
        for t in a.terms:
            if isinstance(t, Var) and t not in seen:
                seen.append(t)
    return tuple(seen)


# ---------------------------------------------------------------------------
# constraints


def _norm_pair(x: Term, y: Term):
    """Normalize a disequality endpoint pair into the storage form."""
    if isinstance(x, Var) and isinstance(y, Var):
        if _var_key(y) < _var_key(x):
            x, y = y, x
        return ("vv", (x, y))
    if isinstance(x, Const) and isinstance(y, Var):
        x, y = y, x
    if isinstance(x, Var) and isinstance(y, Const):
        return ("vc", (x, y))
    raise ValueError("a disequality needs at least one logical variable")


@dataclass(frozen=True)
class Constraint:
    """A conjunction of pairwise disequalities (var != var, var != const).

    ``unsat`` marks constraints that became unsatisfiable under substitution
    (e.g. X != Y after applying Y/X); such parfactors have empty groundings.
    """

    var_pairs: frozenset = frozenset()
    const_pairs: frozenset = frozenset()
    unsat: bool = False

    EMPTY: "Constraint" = None  # set after class definition
    UNSAT: "Constraint" = None

    @classmethod
    def of(cls, *pairs) -> "Constraint":
        vv, vc = set(), set()
        for x, y in pairs:
            kind, p = _norm_pair(x, y)
            (vv if kind == "vv" else vc).add(p)
        return cls(frozenset(vv), frozenset(vc))

    def add(self, *pairs) -> "Constraint":
        if self.unsat:
            return self
        extra = Constraint.of(*pairs)
        return Constraint(self.var_pairs | extra.var_pairs, self.const_pairs | extra.const_pairs)

    @property
    def is_empty(self) -> bool:
        return not self.unsat and not self.var_pairs and not self.const_pairs

    def substituted(self, theta: "Subst") -> "Constraint":
        if self.unsat:
            return self
        vv, vc = set(), set()
        for a, b in self.var_pairs:
            ia, ib = theta.get(a), theta.get(b)
            if isinstance(ia, Var) and isinstance(ib, Var):
                if ia == ib:
                    return Constraint.UNSAT
                vv.add(_norm_pair(ia, ib)[1])
            elif isinstance(ia, Const) and isinstance(ib, Const):
                if ia == ib:
                    return Constraint.UNSAT
                # distinct constants: trivially satisfied, drop
            else:
                vc.add(_norm_pair(ia, ib)[1])
        for v, c in self.const_pairs:
            iv = theta.get(v)
            if isinstance(iv, Var):
                vc.add((iv, c))
            elif iv == c:
                return Constraint.UNSAT
        return Constraint(frozenset(vv), frozenset(vc))

    def project(self, keep) -> "Constraint":
        """Retain disequalities whose variable endpoints all lie in ``keep``."""
        if self.unsat:
            return self
        keep = set(keep)
        return Constraint(
            frozenset(p for p in self.var_pairs if p[0] in keep and p[1] in keep),
            frozenset(p for p in self.const_pairs if p[0] in keep),
        )

    def var_neighbors(self, v: Var) -> set:
        out = set()
        for a, b in self.var_pairs:
            if a == v:
                out.add(b)
            elif b == v:
                out.add(a)
        return out

    def const_exclusions(self, v: Var) -> set:
        return {c for (u, c) in self.const_pairs if u == v}

    def forbids(self, x: Var, y) -> bool:
        """True when x != y is entailed syntactically."""
        if self.unsat:
            return True
        if isinstance(y, Var):
            return _norm_pair(x, y)[1] in self.var_pairs
        return (x, y) in self.const_pairs

    def holds(self, binding: dict) -> bool:
        """Evaluate under a total binding Var -> constant index."""
        if self.unsat:
            return False
        for a, b in self.var_pairs:
            if binding[a] == binding[b]:
                return False
        for v, c in self.const_pairs:
            if binding[v] == c.index:
                return False
        return True

    def variables(self) -> set:
        out = set()
        for a, b in self.var_pairs:
            out.update((a, b))
        out.update(v for v, _ in self.const_pairs)
        return out

    def render(self) -> str:
        if self.unsat:
            return "<unsat>"
        parts = sorted(
            [f"{a} != {b}" for a, b in self.var_pairs]
            + [f"{v} != {c}" for v, c in self.const_pairs]
        )
        return ", ".join(parts)

    def __str__(self):
        return self.render()


Constraint.EMPTY = Constraint()
Constraint.UNSAT = Constraint(unsat=True)


# ---------------------------------------------------------------------------
# substitutions


class Subst:
    """A substitution: a map from logical variables to terms.

    Images must respect domains; a ground substitution maps every variable in
    its scope to a constant.
    """

    __slots__ = ("_map",)

    def __init__(self, mapping: dict):
        for v, t in mapping.items():
            if not isinstance(v, Var):
                raise ValueError(f"substitution key {v!r} is not a variable")
            if t.domain != v.domain:
                raise ValueError(
                    f"domain mismatch: {v!r} cannot map to {t!r} ({v.domain.name} vs {t.domain.name})"
                )
        self._map = dict(mapping)

    @property
    def mapping(self) -> dict:
        return dict(self._map)

    def __contains__(self, v):
        return v in self._map

    def get(self, t: Term) -> Term:
        return self._map.get(t, t) if isinstance(t, Var) else t

    def atom(self, a: Atom) -> Atom:
        return Atom(a.pred, tuple(self.get(t) for t in a.terms))

    def constraint(self, c: Constraint) -> Constraint:
        return c.substituted(self)

    def is_ground(self) -> bool:
        return all(isinstance(t, Const) for t in self._map.values())

    def __repr__(self):
        inner = ", ".join(f"{v}/{t}" for v, t in self._map.items())
        return f"Subst({inner})"


# ---------------------------------------------------------------------------
# potential tables


class PotentialTable:
    """Dense potential stored in natural-log space.

    Axis order follows the parfactor's atom list with the first atom as the
    most significant index (row-major). Entries are finite or -inf (weight 0).
    """

    __slots__ = ("log_values",)

    def __init__(self, log_values):
        arr = np.array(log_values, dtype=np.float64)
        if np.isnan(arr).any() or np.isposinf(arr).any():
            raise ValueError("log weights must be finite or -inf")
        arr.setflags(write=False)
        object.__setattr__(self, "log_values", arr)

    def __setattr__(self, *a):  # immutability
        raise AttributeError("PotentialTable is immutable")

    @classmethod
    def from_linear(cls, values, axes=None) -> "PotentialTable":
        arr = np.array(values, dtype=np.float64)
        if axes is not None:
            arr = arr.reshape(axes)
        if np.isnan(arr).any() or np.isinf(arr).any() or (arr < 0).any():
            raise ValueError("linear weights must be finite and non-negative")
        with np.errstate(divide="ignore"):
            return cls(np.log(arr))

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(int(s) for s in self.log_values.shape)

    @property
    def size(self) -> int:
        return int(self.log_values.size)

    def to_linear(self) -> np.ndarray:
        return np.exp(self.log_values)

    def entry(self, idx) -> float:
        return float(self.log_values[tuple(idx)])

    def powered(self, k) -> "PotentialTable":
        """phi**k in linear space, i.e. log values scaled by k."""
        if k == 0:
            return PotentialTable(np.zeros_like(self.log_values))
        return PotentialTable(self.log_values * k)

    def max_entry(self) -> tuple[float, tuple[int, ...]]:
        """Max log value and its lexicographically smallest index."""
        flat = int(np.argmax(self.log_values))
        idx = np.unravel_index(flat, self.log_values.shape)
        return float(self.log_values[idx]), tuple(int(i) for i in idx)

    def __eq__(self, other):
        return (
            isinstance(other, PotentialTable)
            and self.axes == other.axes
            and bool(np.array_equal(self.log_values, other.log_values))
        )

    def allclose(self, other, atol=1e-9) -> bool:
        return self.axes == other.axes and bool(
            np.allclose(self.log_values, other.log_values, atol=atol, rtol=0.0)
        )

    def __repr__(self):
        return f"PotentialTable(axes={self.axes})"


# ---------------------------------------------------------------------------
# parfactors and models


@dataclass(frozen=True, eq=False)
class Parfactor:
    """(L, C, A, phi): logical variables, constraint, atoms, potential."""

    vars: tuple[Var, ...]
    constraint: Constraint
    atoms: tuple[Atom, ...]
    table: PotentialTable

    def render(self, label: str = "phi") -> str:
        body = ", ".join(str(a) for a in self.atoms)
        if self.constraint.is_empty or self.constraint.unsat:
            return f"{label}: {body}"
        return f"{label}: {body} | {self.constraint.render()}"


@dataclass(frozen=True, eq=False)
class Model:
    domains: tuple[Domain, ...]
    predicates: tuple[Predicate, ...]
    parfactors: tuple[Parfactor, ...]

    def domain(self, name: str) -> Domain:
        for d in self.domains:
            if d.name == name:
                return d
        raise KeyError(name)

    def predicate(self, name: str) -> Predicate:
        for p in self.predicates:
            if p.name == name:
                return p
        raise KeyError(name)


# ---------------------------------------------------------------------------
# operations


def apply_substitution(g: Parfactor, theta: Subst) -> Parfactor:
    """Apply theta to a parfactor: g -> (L', C theta, A theta, phi).

    Variables mapped to constants are dropped from L'; the table is shared.
    """
    atoms = tuple(theta.atom(a) for a in g.atoms)
    constraint = g.constraint.substituted(theta)
    vars_out: list[Var] = []
    for v in g.vars:
        img = theta.get(v)
        if isinstance(img, Var) and img not in vars_out:
            vars_out.append(img)
    return Parfactor(tuple(vars_out), constraint, atoms, g.table)


def project_constraint(c: Constraint, keep) -> Constraint:
    return c.project(keep)


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def _known_distinct(p1, p2, constraint: Constraint) -> bool:
    """Whether two pins (constants or excluded variables) must take distinct values."""
    c1, c2 = isinstance(p1, Const), isinstance(p2, Const)
    if c1 and c2:
        return p1 != p2
    if c1:
        return constraint.forbids(p2, p1)
    if c2:
        return constraint.forbids(p1, p2)
    return constraint.forbids(p1, p2)


def count_groundings(count_vars, constraint: Constraint) -> int:
    """|L : C| for the counted variables, exact and domain-size independent.

    Variables mentioned by C but not counted are treated as bound ("pins").
    All pins constraining one connected component of counted variables must be
    pairwise known-distinct, otherwise the count would depend on their binding
    and NonNormalForm is raised. Counting itself is inclusion-exclusion over
    the disequality edges, so arbitrary disequality graphs among the counted
    variables are handled exactly.
    """
    if constraint.unsat:
        return 0
    counted: list[Var] = []
    for v in count_vars:
        if v not in counted:
            counted.append(v)
    cset = set(counted)
    for a, b in constraint.var_pairs:
        if a == b and a in cset:
            return 0  # self-disequality is unsatisfiable

    total = 1
    domains = []
    for v in counted:
        if v.domain not in domains:
            domains.append(v.domain)
    for dom in domains:
        group = [v for v in counted if v.domain == dom]
        total *= _count_group(group, cset, constraint, dom.size)
    return total


def _count_group(group, counted_set, constraint, n) -> int:
    edges = []      # (u, v) both counted, this domain
    pin_edges = []  # (v, pin) with pin a Const or an excluded Var
    for a, b in constraint.var_pairs:
        if a.domain != group[0].domain or a == b:
            continue
        a_in, b_in = a in counted_set, b in counted_set
        if a_in and b_in:
            if a in group:
                edges.append((a, b))
        elif a_in and a in group:
            pin_edges.append((a, b))
        elif b_in and b in group:
            pin_edges.append((b, a))
    for v, c in constraint.const_pairs:
        if v in counted_set and v in group:
            pin_edges.append((v, c))
    edges = sorted(set(edges), key=lambda e: (_var_key(e[0]), _var_key(e[1])))
    pin_edges = sorted(set(pin_edges), key=lambda e: (_var_key(e[0]), str(e[1])))

    # connected components over counted variables
    uf = _UnionFind(group)
    for a, b in edges:
        uf.union(a, b)
    comps: dict = {}
    for v in group:
        comps.setdefault(uf.find(v), []).append(v)

    result = 1
    for comp in comps.values():
        comp_set = set(comp)
        comp_edges = [e for e in edges if e[0] in comp_set]
        comp_pins = [e for e in pin_edges if e[0] in comp_set]
        distinct_pins = []
        for _, pin in comp_pins:
            if pin not in distinct_pins:
                distinct_pins.append(pin)
        for p1, p2 in combinations(distinct_pins, 2):
            if not _known_distinct(p1, p2, constraint):
                raise NonNormalForm(
                    f"count over {{{', '.join(str(v) for v in comp)}}} depends on the "
                    f"binding of {p1} vs {p2}"
                )
        if len(comp) == 1 and not comp_edges:
            result *= max(n - len(distinct_pins), 0)
            continue
        items = comp_edges + comp_pins
        if len(items) > 22:
            raise NonNormalForm(
                f"disequality structure too dense to count exactly ({len(items)} edges)"
            )
        result *= _inclusion_exclusion(comp, items, n)
        if result == 0:
            return 0
    return result


def _inclusion_exclusion(comp, items, n) -> int:
    """Count assignments of ``comp`` over n values violating no disequality.

    Sums (-1)^|S| over subsets S of disequalities forced into equalities.
    """
    total = 0
    m = len(items)
    for mask in range(1 << m):
        uf = _UnionFind(comp)
        pin_of: dict = {}
        sign = 1
        ok = True
        for i in range(m):
            if not mask >> i & 1:
                continue
            sign = -sign
            a, b = items[i]
            if isinstance(b, (Const, Var)) and b not in uf.parent:
                # pin edge: force a = pin
                root = uf.find(a)
                if root in pin_of and pin_of[root] != b:
                    ok = False
                    break
                pin_of[root] = b
            else:
                uf.union(a, b)
        if not ok:
            continue
        # re-root pins after unions
        roots: dict = {}
        for root, pin in pin_of.items():
            r = uf.find(root)
            if r in roots and roots[r] != pin:
                ok = False
                break
            roots[r] = pin
        if not ok:
            continue
        unpinned = {uf.find(v) for v in comp} - set(roots)
        total += sign * n ** len(unpinned)
    return max(total, 0)


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def __str__(self):
        lines = [f"error: {e}" for e in self.errors] + [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines) if lines else "ok"


def validate_model(m: Model) -> ValidationReport:
    """Check structural well-formedness; a clean report means every other
    operation's preconditions on well-formedness hold."""
    rep = ValidationReport()
    err, warn = rep.errors.append, rep.warnings.append

    names = [d.name for d in m.domains]
    if len(set(names)) != len(names):
        err("duplicate domain names")
    pnames = [p.name for p in m.predicates]
    if len(set(pnames)) != len(pnames):
        err("duplicate predicate names")
    declared_preds = set(m.predicates)
    for p in m.predicates:
        if p.range_size < 2:
            err(f"predicate {p.name}: range must be >= 2, got {p.range_size}")

    for i, g in enumerate(m.parfactors):
        tag = f"parfactor {i}"
        var_set = set(g.vars)
        if len(var_set) != len(g.vars):
            err(f"{tag}: duplicate logical variables")
        vnames = [v.name for v in g.vars]
        if len(set(vnames)) != len(vnames):
            err(f"{tag}: distinct variables share a name")
        for a in g.atoms:
            if a.pred not in declared_preds:
                err(f"{tag}: atom {a} uses undeclared predicate {a.pred.name}")
            if len(a.terms) != a.pred.arity:
                err(
                    f"{tag}: atom {a} has {len(a.terms)} terms, predicate "
                    f"{a.pred.name} has arity {a.pred.arity}"
                )
                continue
            for k, t in enumerate(a.terms):
                if t.domain != a.pred.domains[k]:
                    err(
                        f"{tag}: atom {a} term {t} at position {k} has domain "
                        f"{t.domain.name}, expected {a.pred.domains[k].name}"
                    )
                if isinstance(t, Var) and t not in var_set:
                    err(f"{tag}: atom {a} uses undeclared variable {t}")
        for a, b in g.constraint.var_pairs:
            if a == b:
                err(f"{tag}: disequality relates {a} to itself")
            if a.domain != b.domain:
                err(f"{tag}: cross-domain disequality {a} != {b}")
            for v in (a, b):
                if v not in var_set:
                    err(f"{tag}: constraint uses undeclared variable {v}")
        for v, c in g.constraint.const_pairs:
            if v.domain != c.domain:
                err(f"{tag}: cross-domain disequality {v} != {c}")
            if v not in var_set:
                err(f"{tag}: constraint uses undeclared variable {v}")
        expected_axes = tuple(a.pred.range_size for a in g.atoms)
        if g.table.axes != expected_axes:
            err(
                f"{tag}: table axes {g.table.axes} do not match atom ranges "
                f"{expected_axes} ({math.prod(expected_axes)} entries expected)"
            )

        if not rep.errors:
            # disequality neighborhoods that are not cliques are legal but
            # break binding-independent counting at reduction sites
            for v in g.vars:
                neigh = sorted(g.constraint.var_neighbors(v), key=_var_key)
                for x, y in combinations(neigh, 2):
                    if not g.constraint.forbids(x, y):
                        warn(
                            f"{tag}: neighbors {x}, {y} of {v} are not mutually "
                            f"disequal; counts excluding {v} may be rejected"
                        )
            try:
                if count_groundings(g.vars, g.constraint) == 0:
                    warn(f"{tag}: constraint is unsatisfiable, grounding is empty")
            except NonNormalForm:
                pass
    return rep
