"""End-to-end MPE orchestration.

``solve`` runs shatter -> detect -> reduce -> ground solve -> expand, checks
the expanded optimum against the original model, and reports per-stage
timings (detection time separately, since it is the preprocessing overhead).
``conditional_ua_solve`` implements the conditioning extension for a unary
boolean target: splitting its domain by the number of grounds assigned 0
turns non-uniform groups into uniformly assigned ones, one sub-model per
split size.
"""

from __future__ import annotations

import math
import time

from .core import (
    Atom,
    Const,
    Constraint,
    GroundAtom,
    Model,
    Parfactor,
    PotentialTable,
    Predicate,
    Var,
    count_groundings,
    validate_model,
)
from .errors import ConsistencyFailure, UnsupportedShape, ValidationError
from .ground import (
    DEFAULT_CONFIG,
    ENGINES,
    EngineConfig,
    LiftedBlock,
    MpeResult,
    SolveStats,
    model_weight,
)
from .reduction import ReductionMap, simplify
from .shattering import ShatterMap, shatter

_WEIGHT_TOL = 1e-9


def _check_weights(reported: float, recomputed: float, context: str):
    tol = max(_WEIGHT_TOL, 1e-12 * abs(recomputed))
    if not math.isclose(reported, recomputed, abs_tol=tol, rel_tol=0.0):
        raise ConsistencyFailure(
            f"{context}: reported log-weight {reported!r} vs recomputed {recomputed!r}"
        )


def _lifted_blocks(rmap: ReductionMap, reduced_assignment: dict, smap: ShatterMap) -> list:
    out = []
    for pr in rmap.predicates:
        blocks = {}
        for ga, v in sorted(reduced_assignment.items(), key=lambda kv: kv[0].sort_key()):
            if ga.pred == pr.reduced:
                names = tuple(
                    pr.reduced.domains[i].constant_name(a) for i, a in enumerate(ga.args)
                )
                blocks[names] = v
        out.append(
            LiftedBlock(smap.original(pr.original).name, pr.kept_positions, blocks)
        )
    return out


def solve(
    m: Model,
    engine: str = "ve",
    use_uar: bool = True,
    config: EngineConfig | None = None,
) -> MpeResult:
    """Solve the MPE task, optionally through uniform-assignment reduction.

    The reported log-weight is always recomputed as model_weight on the
    original model and must agree with the engine's optimum.
    """
    config = config or DEFAULT_CONFIG
    solver = ENGINES[engine]
    report = validate_model(m)
    if not report.ok:
        raise ValidationError(report)

    if not use_uar:
        res = solver(m, config)
        _check_weights(res.log_weight, model_weight(m, res.assignment), "direct solve")
        res.engine = engine
        return res

    t0 = time.perf_counter()
    shattered, smap = shatter(m)
    t1 = time.perf_counter()
    sim = simplify(shattered)
    res = solver(sim.model, config)
    t2 = time.perf_counter()
    expanded = sim.reduction_map.expand(res.assignment)
    original_assignment = smap.to_original_assignment(expanded)
    weight = model_weight(m, original_assignment)
    _check_weights(res.log_weight, weight, "uar solve")
    t3 = time.perf_counter()
    stats = SolveStats(
        elapsed_s=t3 - t0,
        eliminated=res.stats.eliminated,
        shatter_s=t1 - t0,
        detect_s=sim.detect_s,
        reduce_s=sim.reduce_s,
        solve_s=res.stats.solve_s,
    )
    out = MpeResult(original_assignment, weight, engine, stats)
    out.reduction_map = sim.reduction_map
    out.lifted = _lifted_blocks(sim.reduction_map, res.assignment, smap)
    return out


# ---------------------------------------------------------------------------
# conditional uniform assignments


def _ensure_conditionable(m: Model, pred: Predicate):
    if pred.arity != 1 or pred.range_size != 2:
        raise UnsupportedShape(f"{pred.name} is not a unary boolean predicate")
    dom = pred.domains[0]
    occurs = False
    for g in m.parfactors:
        for a in g.atoms:
            if a.pred == pred:
                occurs = True
                if not isinstance(a.terms[0], Var):
                    raise UnsupportedShape(f"{pred.name} occurs with a constant argument")
        for v in g.constraint.variables():
            if v.domain == dom:
                raise UnsupportedShape(
                    f"variables over {dom.name} must be constraint-free to condition on {pred.name}"
                )
    if not occurs:
        raise UnsupportedShape(f"{pred.name} does not occur in the model")
    return dom


def conditioned_model(m: Model, pred: Predicate, k: int) -> Model:
    """The sub-model for the split 'k grounds of pred are assigned 0'.

    The target domain splits into its first k and remaining n-k constants
    (realized as constant-exclusion constraints), the target's fixed values
    are folded into the tables, variables vanishing with the target atoms
    contribute their block size as an exponent, and copies of one parfactor
    with identical atom lists merge by table product. Parfactors with empty
    groundings are dropped.
    """
    dom = _ensure_conditionable(m, pred)
    n = dom.size
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside 0..{n}")
    merged: dict = {}
    order: list = []
    for gi, g in enumerate(m.parfactors):
        dvars = [v for v in g.vars if v.domain == dom]
        taken = {v.name for v in g.vars}
        split_vars: dict = {}
        for v in dvars:
            pair = []
            for i in (0, 1):
                name = f"{v.name}_{i}"
                while name in taken:
                    name += "_"
                taken.add(name)
                pair.append(Var(name, dom))
            split_vars[v] = pair
        for sigma in _sign_vectors(len(dvars)):
            choice = {v: split_vars[v][s] for v, s in zip(dvars, sigma)}
            side = {split_vars[v][s]: s for v, s in zip(dvars, sigma)}
            table = g.table.log_values
            keep_atoms = []
            fixed_axes = []
            for axis, a in enumerate(g.atoms):
                terms = tuple(choice.get(t, t) if isinstance(t, Var) else t for t in a.terms)
                if a.pred == pred:
                    fixed_axes.append((axis, side[terms[0]]))
                else:
                    keep_atoms.append(Atom(a.pred, terms))
            for axis, value in sorted(fixed_axes, reverse=True):
                idx = [slice(None)] * table.ndim
                idx[axis] = value
                table = table[tuple(idx)]
            new_vars = []
            for v in g.vars:
                if v in choice:
                    new_vars.append(choice[v])
                else:
                    new_vars.append(v)
            exclusions = []
            for w, s in side.items():
                block = range(k, n) if s == 0 else range(0, k)
                exclusions.extend((w, Const(dom, c)) for c in block)
            constraint = g.constraint.add(*exclusions) if exclusions else g.constraint
            kept_vars = tuple(
                v for v in new_vars if any(v in a.variables() for a in keep_atoms)
            )
            removed = tuple(v for v in new_vars if v not in kept_vars)
            if count_groundings(kept_vars, constraint) == 0:
                continue
            exponent = count_groundings(removed, constraint)
            if exponent == 0:
                continue
            log = table if exponent == 1 else table * exponent
            key = (gi, tuple(keep_atoms))
            if key in merged:
                prev_constraint, prev_log = merged[key]
                assert prev_constraint == constraint.project(kept_vars)
                merged[key] = (prev_constraint, prev_log + log)
            else:
                merged[key] = (constraint.project(kept_vars), log)
                order.append((key, kept_vars))
    parfactors = []
    for (key, kept_vars) in order:
        constraint, log = merged[key]
        parfactors.append(Parfactor(kept_vars, constraint, key[1], PotentialTable(log)))
    predicates = tuple(p for p in m.predicates if p != pred)
    return Model(m.domains, predicates, tuple(parfactors))


def _sign_vectors(n: int):
    from itertools import product

    return product((0, 1), repeat=n)


def conditional_ua_solve(
    m: Model,
    target: str | Predicate,
    engine: str = "ve",
    config: EngineConfig | None = None,
) -> MpeResult:
    """MPE by conditioning on a unary boolean predicate.

    For every split size k the conditioned sub-model (free of the target's
    random variables) is shattered, simplified and solved; the best k wins,
    ties preferring the smaller k. The target's first k grounds take value 0
    in the returned assignment, the rest take 1.
    """
    config = config or DEFAULT_CONFIG
    pred = m.predicate(target) if isinstance(target, str) else target
    report = validate_model(m)
    if not report.ok:
        raise ValidationError(report)
    dom = _ensure_conditionable(m, pred)
    n = dom.size
    solver = ENGINES[engine]

    t0 = time.perf_counter()
    best = None
    for k in range(n + 1):
        sub = conditioned_model(m, pred, k)
        shattered, smap = shatter(sub)
        sim = simplify(shattered)
        res = solver(sim.model, config)
        if best is None or res.log_weight > best[0]:
            assignment = smap.to_original_assignment(
                sim.reduction_map.expand(res.assignment)
            )
            best = (res.log_weight, k, assignment)

    weight, k_star, sub_assignment = best
    full = dict(sub_assignment)
    for i in range(n):
        full[GroundAtom(pred, (i,))] = 0 if i < k_star else 1
    recomputed = model_weight(m, full)
    _check_weights(weight, recomputed, f"conditional solve (k={k_star})")
    elapsed = time.perf_counter() - t0
    stats = SolveStats(elapsed_s=elapsed, solve_s=elapsed, sub_solves=n + 1)
    return MpeResult(full, recomputed, f"conditional[{engine}]", stats)
