"""Shattering: rewrite a model so any two atoms' random-variable sets are
pairwise disjoint or equal, with a unique predicate symbol per cell.

The splitting driver repeatedly finds an atom pair whose cells properly
overlap (detected by positional unification under both constraints), splits
the enclosing parfactor by the overlap condition (an equality pattern or a
constant binding) and its complement, and iterates to a fixpoint. Parfactors
whose constraint admits no grounding are dropped (their weight contribution
is the empty product). Finally, atoms are regrouped by cell and predicates
with more than one cell get fresh symbols ``name__<cell index>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product as iproduct

from .core import (
    Atom,
    Const,
    Constraint,
    GroundAtom,
    Model,
    Parfactor,
    Predicate,
    Subst,
    Var,
    apply_substitution,
    count_groundings,
)
from .errors import FixpointBudgetExceeded


# ---------------------------------------------------------------------------
# cells


@dataclass(frozen=True)
class CellKey:
    """Canonical description of rv(atom : C projected onto its variables).

    ``pattern`` holds, per position, either a class id (variables numbered by
    first occurrence) or a pinned constant index. ``diseqs`` holds the
    projected disequalities between class ids / against constant indices.
    """

    pred_name: str
    pattern: tuple
    diseqs: frozenset


def cell_key(atom: Atom, constraint: Constraint) -> CellKey:
    class_of: dict = {}
    pattern = []
    for t in atom.terms:
        if isinstance(t, Const):
            pattern.append(("c", t.index))
        else:
            if t not in class_of:
                class_of[t] = len(class_of)
            pattern.append(class_of[t])
    proj = constraint.project(class_of.keys())
    diseqs = set()
    for a, b in proj.var_pairs:
        if a in class_of and b in class_of:
            i, j = sorted((class_of[a], class_of[b]))
            diseqs.add((i, j))
    for v, c in proj.const_pairs:
        if v in class_of:
            diseqs.add((class_of[v], ("c", c.index)))
    return CellKey(atom.pred.name, tuple(pattern), frozenset(diseqs))


# ---------------------------------------------------------------------------
# pairwise analysis


def _analyze_pair(atom_a: Atom, con_a: Constraint, atom_b: Atom, con_b: Constraint):
    """Relate two same-predicate cells.

    Returns "equal", "disjoint", or a split request ("a"|"b", condition) where
    the condition is (Var, Var) or (Var, Const) to split the enclosing
    parfactor on.
    """
    key_a, key_b = cell_key(atom_a, con_a), cell_key(atom_b, con_b)
    if key_a == key_b:
        return "equal"

    # positional unification: slots are (side, var) wrappers and raw constants
    parent: dict = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        parent[find(x)] = find(y)

    def slot(side, t):
        return t if isinstance(t, Const) else (side, t)

    for ta, tb in zip(atom_a.terms, atom_b.terms):
        union(slot("a", ta), slot("b", tb))

    classes: dict = {}
    for x in list(parent):
        classes.setdefault(find(x), []).append(x)

    requirements = {"a": [], "b": []}  # forced same-value groups per side
    for members in classes.values():
        consts = [x for x in members if isinstance(x, Const)]
        if len(set(consts)) > 1:
            return "disjoint"  # two distinct constants can never coincide
        pin = consts[0] if consts else None
        for side in ("a", "b"):
            side_vars = [v for s, v in [x for x in members if not isinstance(x, Const)] if s == side]
            con = con_a if side == "a" else con_b
            for i in range(len(side_vars)):
                for j in range(i + 1, len(side_vars)):
                    if con.forbids(side_vars[i], side_vars[j]):
                        return "disjoint"
            if pin is not None:
                for v in side_vars:
                    if con.forbids(v, pin):
                        return "disjoint"
            uniq = []
            for v in side_vars:
                if v not in uniq:
                    uniq.append(v)
            if len(uniq) > 1:
                requirements[side].append(("vv", uniq[0], uniq[1]))
            elif uniq and pin is not None:
                requirements[side].append(("vc", uniq[0], pin))

    for side in ("a", "b"):
        atom = atom_a if side == "a" else atom_b
        for kind, x, y in requirements[side]:
            # skip conditions the atom already realizes syntactically
            if kind == "vv" and x == y:
                continue
            return (side, (x, y))

    # identical patterns; reconcile projected constraints
    missing_in_b = key_a.diseqs - key_b.diseqs
    missing_in_a = key_b.diseqs - key_a.diseqs
    for side, missing, atom, key in (
        ("b", missing_in_b, atom_b, key_b),
        ("a", missing_in_a, atom_a, key_a),
    ):
        if not missing:
            continue
        i, j = sorted(missing)[0] if False else min(missing)
        vars_by_class: dict = {}
        for pos, p in enumerate(key.pattern):
            if isinstance(p, int) and p not in vars_by_class:
                vars_by_class[p] = atom.terms[pos]
        if isinstance(j, tuple):  # (class, constant) disequality
            const = Const(vars_by_class[i].domain, j[1])
            return (side, (vars_by_class[i], const))
        return (side, (vars_by_class[i], vars_by_class[j]))
    return "equal"


def _split_parfactor(g: Parfactor, cond) -> list[Parfactor]:
    """Split g on a binding condition: the bound branch and its complement.

    Branches whose constraints admit no grounding are dropped.
    """
    x, y = cond
    if isinstance(y, Var):
        # keep the variable that occurs earlier in g.vars
        if g.vars.index(y) < g.vars.index(x):
            x, y = y, x
        bound = apply_substitution(g, Subst({y: x}))
    else:
        bound = apply_substitution(g, Subst({x: y}))
    rest = Parfactor(g.vars, g.constraint.add((x, y)), g.atoms, g.table)
    out = []
    for h in (bound, rest):
        if h.constraint.unsat:
            continue
        if count_groundings(h.vars, h.constraint) == 0:
            continue
        out.append(h)
    return out


# ---------------------------------------------------------------------------
# driver


@dataclass
class ShatterMap:
    """Mapping from fresh cell predicates back to the original predicates."""

    renames: dict = field(default_factory=dict)  # new Predicate -> original Predicate

    def original(self, pred: Predicate) -> Predicate:
        return self.renames.get(pred, pred)

    def to_original_assignment(self, assignment: dict) -> dict:
        return {
            GroundAtom(self.original(ga.pred), ga.args): v for ga, v in assignment.items()
        }

    def to_shattered_assignment(self, shattered: Model, assignment: dict) -> dict:
        from .ground import model_rvs

        out = {}
        for ga in model_rvs(shattered):
            out[ga] = assignment[GroundAtom(self.original(ga.pred), ga.args)]
        return out


def shatter(m: Model, max_splits: int = 10_000) -> tuple[Model, ShatterMap]:
    """Produce a completely shattered model entailing the same ground factors.

    Atoms with equal rv-sets share one predicate symbol and distinct cells get
    distinct symbols; predicates with a single cell keep their name. The
    returned map records the renames so assignments translate back.
    """
    parfactors = [
        g
        for g in m.parfactors
        if not g.constraint.unsat and count_groundings(g.vars, g.constraint) > 0
    ]
    splits = 0
    while True:
        action = None
        entries = [
            (gi, ai, g.atoms[ai], g.constraint)
            for gi, g in enumerate(parfactors)
            for ai in range(len(g.atoms))
        ]
        for i in range(len(entries)):
            gi, ai, atom_i, con_i = entries[i]
            for j in range(i + 1, len(entries)):
                gj, aj, atom_j, con_j = entries[j]
                if atom_i.pred != atom_j.pred:
                    continue
                rel = _analyze_pair(atom_i, con_i, atom_j, con_j)
                if rel in ("equal", "disjoint"):
                    continue
                side, cond = rel
                target = gi if side == "a" else gj
                action = (target, cond)
                break
            if action:
                break
        if action is None:
            break
        splits += 1
        if splits > max_splits:
            raise FixpointBudgetExceeded(
                f"shattering did not stabilize within {max_splits} splits"
            )
        target, cond = action
        parfactors[target : target + 1] = _split_parfactor(parfactors[target], cond)

    return _rename_cells(m, parfactors)


def _rename_cells(m: Model, parfactors) -> tuple[Model, ShatterMap]:
    cells: dict = {}  # CellKey -> fresh Predicate (discovery order per original)
    cells_per_pred: dict = {}
    for g in parfactors:
        for a in g.atoms:
            key = cell_key(a, g.constraint)
            if key not in cells:
                cells_per_pred.setdefault(a.pred, []).append(key)
                cells[key] = None

    used_names = {p.name for p in m.predicates}
    smap = ShatterMap()
    for pred, keys in cells_per_pred.items():
        if len(keys) == 1:
            cells[keys[0]] = pred
            continue
        for i, key in enumerate(keys):
            name = f"{pred.name}__{i}"
            while name in used_names:
                name += "_"
            used_names.add(name)
            fresh = Predicate(name, pred.domains, pred.range_size)
            cells[key] = fresh
            smap.renames[fresh] = pred

    new_parfactors = []
    for g in parfactors:
        atoms = tuple(
            Atom(cells[cell_key(a, g.constraint)], a.terms) for a in g.atoms
        )
        new_parfactors.append(Parfactor(g.vars, g.constraint, atoms, g.table))

    predicates = []
    for p in m.predicates:
        keys = cells_per_pred.get(p, [])
        if len(keys) <= 1:
            predicates.append(p)
        else:
            predicates.extend(cells[k] for k in keys)
    return Model(m.domains, tuple(predicates), tuple(new_parfactors)), smap


# ---------------------------------------------------------------------------
# post-condition checker


def check_completely_shattered(m: Model, enumerate_upto: int = 4) -> bool:
    """Verify pairwise disjoint-or-equal cells, symbolically and (on small
    domains) by explicit rv enumeration. Raises AssertionError on violation."""
    entries = [
        (g.atoms[ai], g.constraint)
        for g in m.parfactors
        for ai in range(len(g.atoms))
    ]
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            a, ca = entries[i]
            b, cb = entries[j]
            if a.pred != b.pred:
                continue
            rel = _analyze_pair(a, ca, b, cb)
            assert rel in ("equal", "disjoint"), (
                f"atoms {a} and {b} have properly overlapping rv sets"
            )
            if all(d.size <= enumerate_upto for d in a.pred.domains):
                ra, rb = _rv_set(a, ca), _rv_set(b, cb)
                assert ra == rb or not (ra & rb), f"rv sets of {a} and {b} overlap"
    # distinct cells carry distinct symbols, equal cells share one
    by_pred: dict = {}
    for a, c in entries:
        by_pred.setdefault(a.pred, set()).add(cell_key(a, c))
    for pred, keys in by_pred.items():
        assert len(keys) == 1, f"predicate {pred.name} spans {len(keys)} cells"
    return True


def _rv_set(atom: Atom, constraint: Constraint) -> set:
    vs = atom.variables()
    proj = constraint.project(vs)
    out = set()
    for combo in iproduct(*(range(v.domain.size) for v in vs)):
        binding = dict(zip(vs, combo))
        if not proj.holds(binding):
            continue
        out.add(
            GroundAtom(
                atom.pred,
                tuple(
                    binding[t] if isinstance(t, Var) else t.index for t in atom.terms
                ),
            )
        )
    return out
