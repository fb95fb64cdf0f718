"""Uniform assignment reduction.

Arity reduction of atoms to their anchored positions, parfactor reduction
with exact exponent computation (the potential is raised to the grounding
count of the removed variables under the constraint, with the retained
variables treated as bound), the model-level simplification driver, and the
assignment-expansion construction that lifts a simplified MPE back to the
pre-reduction model.
"""

from __future__ import annotations

import time
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
    Var,
    count_groundings,
)
from .symbolic import AnchoredFormula, DetectionResult, detect_uniform_assignments


# ---------------------------------------------------------------------------
# reduction bookkeeping


@dataclass(frozen=True)
class PredicateReduction:
    """How one predicate was arity-reduced, plus the cell needed to expand
    assignments back: a representative atom and its projected constraint."""

    original: Predicate
    reduced: Predicate
    kept_positions: tuple
    removed_positions: tuple
    cell_atom: Atom
    cell_constraint: Constraint

    def expand_args(self, kept_args: tuple) -> list:
        """All original-argument tuples whose kept positions equal kept_args."""
        binding: dict = {}
        for pos, value in zip(self.kept_positions, kept_args):
            t = self.cell_atom.terms[pos]
            if isinstance(t, Const):
                continue
            if t in binding and binding[t] != value:
                return []
            binding[t] = value
        free = [
            t
            for pos in self.removed_positions
            for t in [self.cell_atom.terms[pos]]
            if isinstance(t, Var) and t not in binding
        ]
        uniq_free = []
        for v in free:
            if v not in uniq_free:
                uniq_free.append(v)
        out = []
        for combo in iproduct(*(range(v.domain.size) for v in uniq_free)):
            full = dict(binding)
            full.update(zip(uniq_free, combo))
            if not self.cell_constraint.holds(full):
                continue
            out.append(
                tuple(
                    t.index if isinstance(t, Const) else full[t]
                    for t in self.cell_atom.terms
                )
            )
        return out


@dataclass(frozen=True)
class ParfactorReduction:
    parfactor_index: int
    formula: AnchoredFormula
    exponent: int
    removed_vars: tuple  # variable names


@dataclass
class ReductionMap:
    """Records removed positions and applied exponents; the bridge from a
    simplified MPE back to the original (shattered) model."""

    predicates: tuple = ()
    parfactors: tuple = ()

    @property
    def is_empty(self) -> bool:
        return not self.predicates and not self.parfactors

    def expand(self, assignment: dict) -> dict:
        """The assignment-expansion construction: each reduced ground atom's
        value is broadcast to every original ground atom sharing its
        kept-position constants; untouched atoms are copied verbatim."""
        by_reduced = {pr.reduced: pr for pr in self.predicates}
        out: dict = {}
        for ga, value in assignment.items():
            pr = by_reduced.get(ga.pred)
            if pr is None:
                out[ga] = value
                continue
            for args in pr.expand_args(ga.args):
                out[GroundAtom(pr.original, args)] = value
        return out


# ---------------------------------------------------------------------------
# arity reduction


def arity_reduce(atom: Atom, formula: AnchoredFormula, reduced_pred: Predicate | None = None) -> Atom:
    """atom restricted to formula: keep exactly the anchored positions under a
    fresh predicate; atoms of other predicates are returned unchanged."""
    if atom.pred != formula.pred:
        return atom
    kept = sorted(formula.anchored)
    if reduced_pred is None:
        reduced_pred = Predicate(
            atom.pred.name + "′",
            tuple(atom.pred.domains[i] for i in kept),
            atom.pred.range_size,
        )
    return Atom(reduced_pred, tuple(atom.terms[i] for i in kept))


def _dedup_atoms_table(atoms, table):
    """Collapse duplicate atoms by restricting the table to their diagonal."""
    uniq, axis_map = [], []
    for a in atoms:
        if a in uniq:
            axis_map.append(uniq.index(a))
        else:
            axis_map.append(len(uniq))
            uniq.append(a)
    if len(uniq) == len(atoms):
        return tuple(atoms), table
    import numpy as np

    from .core import PotentialTable

    grids = np.indices([a.pred.range_size for a in uniq])
    merged = table.log_values[tuple(grids[i] for i in axis_map)]
    return tuple(uniq), PotentialTable(merged)


def uar_parfactor(
    g: Parfactor, formula: AnchoredFormula, reduced_pred: Predicate | None = None
) -> tuple[Parfactor, int]:
    """Reduce one parfactor by one anchored formula.

    Returns the reduced parfactor and the exponent applied to its potential:
    the grounding count of the removed variables with the retained ones
    treated as bound. Raises NonNormalForm when that count would depend on
    the binding.
    """
    if all(a.pred != formula.pred for a in g.atoms):
        return g, 1
    reduced_atoms = [arity_reduce(a, formula, reduced_pred) for a in g.atoms]
    kept_vars = tuple(v for v in g.vars if any(v in a.variables() for a in reduced_atoms))
    removed = tuple(v for v in g.vars if v not in kept_vars)
    exponent = count_groundings(removed, g.constraint)
    atoms, table = _dedup_atoms_table(reduced_atoms, g.table)
    if exponent != 1:
        table = table.powered(exponent)
    constraint = g.constraint.project(kept_vars)
    return Parfactor(kept_vars, constraint, atoms, table), exponent


# ---------------------------------------------------------------------------
# model-level driver


@dataclass
class SimplifyResult:
    model: Model
    formulas: tuple
    reduction_map: ReductionMap
    detection: DetectionResult
    detect_s: float = 0.0
    reduce_s: float = 0.0


def _fresh_pred_name(base: str, used: set) -> str:
    name = base + "′"
    if name not in used:
        return name
    k = 2
    while f"{name}{k}" in used:
        k += 1
    return f"{name}{k}"


def simplify(m: Model, trace: bool = False) -> SimplifyResult:
    """Detect uniform assignments on a completely shattered model, then apply
    the reduction for every anchored formula to every parfactor.

    Formulas with all positions anchored are pure renames and are skipped, so
    a model with no exploitable uniformity is returned unchanged with an empty
    ReductionMap. The output preserves the MPE probability of the input.
    """
    t0 = time.perf_counter()
    detection = detect_uniform_assignments(m, trace=trace)
    t1 = time.perf_counter()

    active = [f for f in detection.formulas if not f.fully_anchored]
    active.sort(key=lambda f: f.pred.name)

    used_names = {p.name for p in m.predicates}
    pred_reductions = []
    reduced_of: dict = {}
    for f in active:
        kept = tuple(sorted(f.anchored))
        removed = tuple(i for i in range(f.pred.arity) if i not in f.anchored)
        name = _fresh_pred_name(f.pred.name, used_names)
        used_names.add(name)
        reduced = Predicate(name, tuple(f.pred.domains[i] for i in kept), f.pred.range_size)
        reduced_of[f.pred] = reduced
        cell_atom, cell_constraint = _cell_of(m, f.pred)
        pred_reductions.append(
            PredicateReduction(f.pred, reduced, kept, removed, cell_atom, cell_constraint)
        )

    parfactors = list(m.parfactors)
    pf_reductions = []
    for f in active:
        for i, g in enumerate(parfactors):
            if all(a.pred != f.pred for a in g.atoms):
                continue
            removed_before = [v.name for v in g.vars]
            reduced_g, exponent = uar_parfactor(g, f, reduced_of[f.pred])
            removed_names = tuple(
                n for n in removed_before if n not in {v.name for v in reduced_g.vars}
            )
            parfactors[i] = reduced_g
            pf_reductions.append(ParfactorReduction(i, f, exponent, removed_names))

    predicates = []
    for p in m.predicates:
        q = reduced_of.get(p, p)
        if any(a.pred == q for g in parfactors for a in g.atoms):
            predicates.append(q)
    out = Model(m.domains, tuple(predicates), tuple(parfactors))
    rmap = ReductionMap(tuple(pred_reductions), tuple(pf_reductions))
    if rmap.is_empty:
        out = m  # structurally untouched input
    t2 = time.perf_counter()
    if trace:
        labels = [f"phi{i + 1}" for i in range(len(out.parfactors))]
        rows = []
        for i, g in enumerate(out.parfactors):
            total = 1
            for pr in pf_reductions:
                if pr.parfactor_index == i:
                    total *= pr.exponent
            label = labels[i] if total == 1 else f"{labels[i]}^{total}"
            rows.append(g.render(label))
        detection.trace.append(("UA reduction", rows))
    return SimplifyResult(out, tuple(active), rmap, detection, t1 - t0, t2 - t1)


def _cell_of(m: Model, pred: Predicate):
    """Representative atom and projected constraint for a predicate's cell.

    In a completely shattered model every atom of a predicate denotes the
    same rv set, so the first occurrence is canonical.
    """
    for g in m.parfactors:
        for a in g.atoms:
            if a.pred == pred:
                return a, g.constraint.project(a.variables())
    raise KeyError(pred.name)


def render_trace(detection_trace) -> str:
    lines = []
    for label, rows in detection_trace:
        lines.append(f"== {label} ==")
        lines.extend(f"  {r}" for r in rows)
    return "\n".join(lines)
