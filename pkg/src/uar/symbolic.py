"""Purely symbolic uniform-assignment detection.

Overlap sets, effect scopes, anchoring, model alignment and symbolic fusion,
composed into the detection loop: anchor every parfactor with a nonempty
overlap set, re-align the model until every instance of a predicate carries
the same anchored-position mask, fuse random-variable-sharing parfactor
pairs, and repeat until no parfactor has an overlap set and no two parfactors
share a predicate. The anchored formulas of the terminal model mark groups of
random variables that are partially uniformly assigned with respect to the
variables in the anchored positions.

Anchoring is implemented directly on position masks; materializing the
propositionalize-then-fuse construction it abbreviates is equivalent but
domain-size dependent (the test-suite checks the equivalence on small
domains). Nothing here ever reads a potential table.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import Atom, Const, Constraint, Model, Parfactor, Predicate, Var, _var_key


class _Anchor:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "*"


ANCHOR = _Anchor()

Marker = Var | Const | _Anchor


@dataclass(frozen=True)
class AnchoredAtom:
    """An atom whose positions are anchored (*) or hold a term."""

    pred: Predicate
    markers: tuple

    @property
    def anchored_positions(self) -> frozenset:
        return frozenset(i for i, m in enumerate(self.markers) if m is ANCHOR)

    def variables(self) -> tuple:
        seen = []
        for m in self.markers:
            if isinstance(m, Var) and m not in seen:
                seen.append(m)
        return tuple(seen)

    def __str__(self):
        if not self.markers:
            return self.pred.name
        return f"{self.pred.name}({', '.join(str(m) for m in self.markers)})"


@dataclass(frozen=True)
class SymbolicParfactor:
    """A parfactor skeleton used during detection; carries no table."""

    vars: tuple
    constraint: Constraint
    atoms: tuple

    @classmethod
    def from_parfactor(cls, g: Parfactor) -> "SymbolicParfactor":
        return cls(g.vars, g.constraint, tuple(AnchoredAtom(a.pred, a.terms) for a in g.atoms))

    def render(self, label: str = "phi") -> str:
        body = ", ".join(str(a) for a in self.atoms)
        if self.constraint.is_empty or self.constraint.unsat:
            return f"{label}: {body}"
        return f"{label}: {body} | {self.constraint.render()}"


@dataclass(frozen=True)
class AnchoredFormula:
    """A predicate plus the set of positions that stay under arity reduction."""

    pred: Predicate
    anchored: frozenset

    @property
    def fully_anchored(self) -> bool:
        return len(self.anchored) == len(self.pred.domains)

    def __str__(self):
        marks = ("*" if i in self.anchored else "_" for i in range(self.pred.arity))
        if self.pred.arity == 0:
            return self.pred.name
        return f"{self.pred.name}({', '.join(marks)})"


# ---------------------------------------------------------------------------
# overlap set and effect scope


def overlap_set(g: SymbolicParfactor) -> set:
    """Logical variables that do not occupy the same positions under all
    instances of the same predicate. Anchored positions never contribute; a
    position holding a constant in one instance and a variable in another
    marks that variable as overlapping."""
    by_pred: dict = {}
    for a in g.atoms:
        by_pred.setdefault(a.pred, []).append(a.markers)
    out: set = set()
    for instances in by_pred.values():
        if len(instances) < 2:
            continue
        for col in zip(*instances):
            distinct = {id(m) if m is ANCHOR else m for m in col}
            if len(distinct) > 1:
                out.update(m for m in col if isinstance(m, Var))
    return out


def effect_scope(g: SymbolicParfactor, l_o) -> set:
    """Minimal superset of l_o whose binding the remaining variables' legal
    substitutions do not depend on: the union of constraint-graph connected
    components (variable-variable edges) touching l_o."""
    out = set(l_o)
    frontier = list(l_o)
    while frontier:
        v = frontier.pop()
        for u in g.constraint.var_neighbors(v):
            if u not in out:
                out.add(u)
                frontier.append(u)
    return out


# ---------------------------------------------------------------------------
# anchoring and alignment


def anchor(g: SymbolicParfactor, l_o) -> SymbolicParfactor:
    """g (*) l_o: anchor every position held by a variable of the effect
    scope, drop those variables, project the constraint, and collapse
    duplicate atoms created by the marking."""
    eff = effect_scope(g, l_o)
    atoms = []
    for a in g.atoms:
        markers = tuple(ANCHOR if isinstance(m, Var) and m in eff else m for m in a.markers)
        sym = AnchoredAtom(a.pred, markers)
        if sym not in atoms:
            atoms.append(sym)
    remaining = tuple(v for v in g.vars if v not in eff)
    return SymbolicParfactor(remaining, g.constraint.project(remaining), tuple(atoms))


def _anchored_mask(gs) -> dict:
    mask: dict = {}
    for g in gs:
        for a in g.atoms:
            mask.setdefault(a.pred, set()).update(a.anchored_positions)
    return mask


def _align_once(g: SymbolicParfactor, mask: dict) -> SymbolicParfactor:
    targets = {
        m
        for a in g.atoms
        if a.pred in mask
        for i, m in enumerate(a.markers)
        if i in mask[a.pred] and isinstance(m, Var)
    }
    return anchor(g, targets) if targets else g


def align(model, g_star: SymbolicParfactor):
    """Anchor every parfactor over the variables sitting in positions that are
    anchored in g_star under shared predicates, then re-align until all
    instances of each predicate are anchored consistently."""
    mask = _anchored_mask([g_star])
    gs = [_align_once(g, mask) for g in model]
    return _mask_fixpoint(gs)


def _mask_fixpoint(gs):
    gs = list(gs)
    while True:
        mask = _anchored_mask(gs)
        changed = False
        for i, g in enumerate(gs):
            aligned = _align_once(g, mask)
            if aligned != g:
                gs[i] = aligned
                changed = True
        if not changed:
            return gs


def check_mask_consistency(gs):
    """Every instance of a predicate must carry the same anchored positions."""
    mask: dict = {}
    for g in gs:
        for a in g.atoms:
            prev = mask.setdefault(a.pred, a.anchored_positions)
            if prev != a.anchored_positions:
                raise AssertionError(
                    f"inconsistent anchored positions for {a.pred.name}: "
                    f"{sorted(prev)} vs {sorted(a.anchored_positions)}"
                )
    return mask


# ---------------------------------------------------------------------------
# symbolic fusion


def _fresh_var(v: Var, taken: set) -> Var:
    name = v.name
    while name in taken:
        name += "_"
    return Var(name, v.domain)


def symbolic_fusion(g1: SymbolicParfactor, g2: SymbolicParfactor) -> SymbolicParfactor:
    """Merge g2 into g1 under a greedy variable unification.

    g2's variables are first renamed apart (same-named variables in different
    parfactors are distinct). Shared predicates are then processed in
    decreasing count of unanchored positions; instances are paired in model
    order. A pair merges only when the induced renaming stays injective and
    maps variables to variables; otherwise the g2 instance is appended under
    the renaming built so far. Leftover g2 variables keep their name when
    free, and the constraints are unioned under the renaming.
    """
    preds1 = {a.pred for a in g1.atoms}
    preds2 = {a.pred for a in g2.atoms}
    shared = preds1 & preds2
    if not shared:
        raise ValueError("symbolic fusion requires a shared predicate")
    for p in shared:
        masks = {
            a.anchored_positions for g in (g1, g2) for a in g.atoms if a.pred == p
        }
        if len(masks) > 1:
            raise AssertionError(f"missed alignment: inconsistent masks for {p.name}")

    def unanchored_count(p: Predicate) -> int:
        for g in (g1, g2):
            for a in g.atoms:
                if a.pred == p:
                    return p.arity - len(a.anchored_positions)
        raise KeyError(p)

    # placeholders keep g2's variables distinct from g1's during matching
    placeholder = {v: Var(f"·{k}", v.domain) for k, v in enumerate(g2.vars)}

    def pre(a: AnchoredAtom) -> AnchoredAtom:
        return AnchoredAtom(
            a.pred,
            tuple(placeholder.get(m, m) if isinstance(m, Var) else m for m in a.markers),
        )

    g2_atoms = [pre(a) for a in g2.atoms]

    mapping: dict = {}      # placeholder -> g1 Var
    targets: set = set()    # g1 vars already used as images (injectivity)
    merged: set = set()     # indices into g2.atoms

    for pred in sorted(shared, key=lambda p: (-unanchored_count(p), p.name)):
        inst1 = [a for a in g1.atoms if a.pred == pred]
        inst2 = [(i, a) for i, a in enumerate(g2_atoms) if a.pred == pred]
        for (i2, a2), a1 in zip(inst2, inst1):
            trial: dict = {}
            ok = True
            for m2, m1 in zip(a2.markers, a1.markers):
                if m2 is ANCHOR:
                    continue
                if isinstance(m2, Const):
                    if m1 != m2:
                        ok = False
                        break
                    continue
                if not isinstance(m1, Var):
                    ok = False  # pinning a g2 variable would shrink its grounding
                    break
                cur = mapping.get(m2, trial.get(m2))
                if cur is None:
                    if m1 in targets or m1 in trial.values():
                        ok = False  # non-injective: would identify g2 variables
                        break
                    trial[m2] = m1
                elif cur != m1:
                    ok = False
                    break
            if ok:
                mapping.update(trial)
                targets.update(trial.values())
                merged.add(i2)

    taken = {v.name for v in g1.vars} | {v.name for v in targets}
    new_vars = []
    for v in g2.vars:
        ph = placeholder[v]
        if ph not in mapping:
            fresh = _fresh_var(v, taken)
            taken.add(fresh.name)
            mapping[ph] = fresh
            new_vars.append(fresh)

    def rename(a: AnchoredAtom) -> AnchoredAtom:
        return AnchoredAtom(
            a.pred,
            tuple(mapping.get(m, m) if isinstance(m, Var) else m for m in a.markers),
        )

    atoms = list(g1.atoms) + [
        rename(a) for i, a in enumerate(g2_atoms) if i not in merged
    ]
    vv = set(g1.constraint.var_pairs)
    vc = set(g1.constraint.const_pairs)
    for a, b in g2.constraint.var_pairs:
        ia = mapping[placeholder[a]] if a in placeholder else a
        ib = mapping[placeholder[b]] if b in placeholder else b
        if _var_key(ib) < _var_key(ia):
            ia, ib = ib, ia
        vv.add((ia, ib))
    for v, c in g2.constraint.const_pairs:
        iv = mapping[placeholder[v]] if v in placeholder else v
        vc.add((iv, c))
    vars_out = list(g1.vars) + new_vars
    return SymbolicParfactor(
        tuple(vars_out), Constraint(frozenset(vv), frozenset(vc)), tuple(atoms)
    )


# ---------------------------------------------------------------------------
# detection


@dataclass
class DetectionResult:
    formulas: tuple            # AnchoredFormula per predicate, sorted by name
    terminal: tuple            # the terminal symbolic model
    iterations: int = 0
    trace: list = field(default_factory=list)  # (stage label, [parfactor renders])

    def formula_set(self) -> frozenset:
        return frozenset(self.formulas)


def _render_state(gs) -> list:
    return [g.render(f"phi{i + 1}") for i, g in enumerate(gs)]


def detect_uniform_assignments(m: Model, trace: bool = False) -> DetectionResult:
    """Run the detection loop on a completely shattered model.

    Each outer iteration strictly decreases (unanchored variable positions,
    parfactor count) lexicographically, so termination is guaranteed.
    """
    gs = [SymbolicParfactor.from_parfactor(g) for g in m.parfactors]
    rows: list = []
    if trace:
        rows.append(("Original model", _render_state(gs)))

    def metric():
        unanchored = sum(
            isinstance(mk, Var) for g in gs for a in g.atoms for mk in a.markers
        )
        return (unanchored, len(gs))

    iterations = 0
    while True:
        before = metric()
        acted = False

        while True:
            target = next(
                ((i, g) for i, g in enumerate(gs) if overlap_set(g)), None
            )
            if target is None:
                break
            i, g = target
            gs[i] = anchor(g, overlap_set(g))
            acted = True
            if trace:
                rows.append(("Anchoring", _render_state(gs)))
            old = list(gs)
            gs = _mask_fixpoint(gs)
            if trace and gs != old:
                rows.append(("Model alignment", _render_state(gs)))
        check_mask_consistency(gs)

        pair = None
        for i in range(len(gs)):
            preds_i = {a.pred for a in gs[i].atoms}
            for j in range(i + 1, len(gs)):
                if preds_i & {a.pred for a in gs[j].atoms}:
                    pair = (i, j)
                    break
            if pair:
                break
        if pair is None:
            break
        i, j = pair
        fused = symbolic_fusion(gs[i], gs[j])
        gs = [g for k, g in enumerate(gs) if k not in (i, j)] + [fused]
        acted = True
        if trace:
            rows.append(("Symbolic fusion", _render_state(gs)))

        iterations += 1
        after = metric()
        assert acted and after < before, "detection failed to make progress"

    mask = check_mask_consistency(gs)
    formulas = tuple(
        AnchoredFormula(pred, frozenset(positions))
        for pred, positions in sorted(mask.items(), key=lambda kv: kv[0].name)
    )
    return DetectionResult(formulas, tuple(gs), iterations, rows)
