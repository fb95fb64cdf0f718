"""Ground semantics and reference MPE engines.

Grounding of parfactors into factor networks, assignment weights (the log of
the double product over parfactors and their ground factors), a brute-force
MPE oracle over the full joint, and an exact max-product variable-elimination
solver. These are the reference semantics everything else is tested against.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from itertools import product
from typing import TYPE_CHECKING

import numpy as np

from .core import Const, GroundAtom, Model, Parfactor, PotentialTable, Var
from .errors import BudgetExceeded, ConsistencyFailure

if TYPE_CHECKING:  # pragma: no cover
    from .reduction import ReductionMap


@dataclass(frozen=True)
class GroundFactor:
    atoms: tuple[GroundAtom, ...]
    table: PotentialTable  # shared with the originating parfactor


@dataclass
class EngineConfig:
    """Budgets for the ground engines; oracles are not a production path."""

    enum_budget: int = 1 << 24      # max assignments brute force will enumerate
    table_budget: int = 1 << 25     # max entries of any VE intermediate table


DEFAULT_CONFIG = EngineConfig()


@dataclass
class SolveStats:
    elapsed_s: float = 0.0
    eliminated: int = 0
    shatter_s: float = 0.0
    detect_s: float = 0.0
    reduce_s: float = 0.0
    solve_s: float = 0.0
    sub_solves: int = 0


@dataclass
class LiftedBlock:
    """A uniformly assigned block: one reduced predicate's ground values."""

    pred: str
    kept_positions: tuple[int, ...]
    blocks: dict  # kept-constant name tuple -> value index


@dataclass
class MpeResult:
    assignment: dict
    log_weight: float
    engine: str
    stats: SolveStats = field(default_factory=SolveStats)
    reduction_map: "ReductionMap | None" = None
    lifted: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# grounding


def enumerate_groundings(g: Parfactor):
    """Yield one GroundFactor per legal ground substitution, in lexicographic
    order over the constant tuple of g.vars."""
    if g.constraint.unsat:
        return
    n = len(g.vars)
    pos = {v: i for i, v in enumerate(g.vars)}
    vv = [(pos[a], pos[b]) for a, b in g.constraint.var_pairs]
    vc = [(pos[v], c.index) for v, c in g.constraint.const_pairs]
    atom_specs = []
    for a in g.atoms:
        atom_specs.append(
            (a.pred, tuple((True, pos[t]) if isinstance(t, Var) else (False, t.index) for t in a.terms))
        )
    for combo in product(*(range(v.domain.size) for v in g.vars)):
        if any(combo[i] == combo[j] for i, j in vv):
            continue
        if any(combo[i] == ci for i, ci in vc):
            continue
        atoms = tuple(
            GroundAtom(pred, tuple(combo[x] if is_var else x for is_var, x in spec))
            for pred, spec in atom_specs
        )
        yield GroundFactor(atoms, g.table)


def model_rvs(m: Model) -> list[GroundAtom]:
    """All random variables entailed by the model's grounding, canonical order."""
    seen = set()
    for g in m.parfactors:
        for f in enumerate_groundings(g):
            seen.update(f.atoms)
    return sorted(seen, key=GroundAtom.sort_key)


def model_weight(m: Model, assignment: dict) -> float:
    """Log combined weight: the sum over all ground factors of the selected
    log table entry. An empty grounding contributes 0 (the empty product)."""
    total = 0.0
    for g in m.parfactors:
        for f in enumerate_groundings(g):
            try:
                idx = tuple(assignment[ga] for ga in f.atoms)
            except KeyError as e:
                raise ValueError(f"assignment missing ground atom {e.args[0]}") from None
            total += f.table.log_values[idx]
    return float(total)


# ---------------------------------------------------------------------------
# shared tensor helpers


def _dedup_scope(atoms: tuple[GroundAtom, ...], log_table: np.ndarray):
    """Collapse repeated random variables in a factor scope onto the diagonal."""
    uniq: list[GroundAtom] = []
    axis_map = []
    for ga in atoms:
        if ga in uniq:
            axis_map.append(uniq.index(ga))
        else:
            axis_map.append(len(uniq))
            uniq.append(ga)
    if len(uniq) == len(atoms):
        return uniq, log_table
    grids = np.indices([ga.pred.range_size for ga in uniq])
    return uniq, log_table[tuple(grids[i] for i in axis_map)]


def _add_embedded(W: np.ndarray, positions: list[int], table: np.ndarray):
    """W += table, with table's axes placed at the given positions of W."""
    order = np.argsort(positions)
    aligned = np.transpose(table, order)
    shape = [1] * W.ndim
    for p, s in zip(sorted(positions), aligned.shape):
        shape[p] = s
    W += aligned.reshape(shape)


# ---------------------------------------------------------------------------
# brute force oracle


def brute_force_mpe(m: Model, config: EngineConfig | None = None) -> MpeResult:
    """Exact maximizer over the full assignment space.

    Ties break toward the lexicographically smallest assignment under the
    canonical ground-atom order (predicate name, then constant tuple).
    """
    config = config or DEFAULT_CONFIG
    t0 = time.perf_counter()
    rvs = model_rvs(m)
    ranges = [ga.pred.range_size for ga in rvs]
    n_assignments = math.prod(ranges)
    if n_assignments > config.enum_budget:
        raise BudgetExceeded("assignment space", n_assignments, config.enum_budget)
    if len(rvs) > 31:
        raise BudgetExceeded("random variable count", len(rvs), 31)

    W = np.zeros(tuple(ranges))
    index = {ga: i for i, ga in enumerate(rvs)}
    for g in m.parfactors:
        for f in enumerate_groundings(g):
            scope, table = _dedup_scope(f.atoms, f.table.log_values)
            _add_embedded(W, [index[ga] for ga in scope], table)

    flat = int(np.argmax(W))  # first max = lexicographically smallest tuple
    idx = np.unravel_index(flat, W.shape) if W.ndim else ()
    assignment = {ga: int(v) for ga, v in zip(rvs, idx)}
    weight = float(W[idx]) if W.ndim else float(W)
    elapsed = time.perf_counter() - t0
    return MpeResult(assignment, weight, "brute", SolveStats(elapsed_s=elapsed, solve_s=elapsed))


# ---------------------------------------------------------------------------
# max-product variable elimination


def _min_degree_order(nodes, adj):
    """Min-degree elimination order, ties by canonical atom order."""
    adj = {v: set(ns) for v, ns in adj.items()}
    remaining = set(nodes)
    heap = [(len(adj[v]), v.sort_key(), v) for v in nodes]
    heapq.heapify(heap)
    order = []
    while remaining:
        while True:
            d, _, v = heapq.heappop(heap)
            if v in remaining and d == len(adj[v] & remaining):
                break
        order.append(v)
        remaining.discard(v)
        neigh = adj[v] & remaining
        for a in neigh:
            adj[a].update(neigh - {a})
            adj[a].discard(v)
            heapq.heappush(heap, (len(adj[a] & remaining), a.sort_key(), a))
    return order


def ve_max_product(m: Model, config: EngineConfig | None = None) -> MpeResult:
    """Exact MPE by max-product variable elimination on the ground network.

    Uses a min-degree ordering; the argmax is recovered by backtracking over
    per-variable maximizing-choice tables.
    """
    config = config or DEFAULT_CONFIG
    t0 = time.perf_counter()
    factors = []  # (scope tuple, log table)
    for g in m.parfactors:
        for f in enumerate_groundings(g):
            scope, table = _dedup_scope(f.atoms, f.table.log_values)
            factors.append((tuple(scope), table))

    adj = {}
    for scope, _ in factors:
        for ga in scope:
            adj.setdefault(ga, set()).update(s for s in scope if s != ga)
    rvs = sorted(adj, key=GroundAtom.sort_key)
    order = _min_degree_order(rvs, adj)

    by_var: dict = {ga: [] for ga in rvs}
    alive: dict = {}
    for fid, f in enumerate(factors):
        alive[fid] = f
        for ga in f[0]:
            by_var[ga].append(fid)

    constant = 0.0
    records = []
    next_id = len(factors)
    for v in order:
        fids = [fid for fid in by_var[v] if fid in alive]
        scope_union: list[GroundAtom] = []
        for fid in fids:
            for ga in alive[fid][0]:
                if ga not in scope_union:
                    scope_union.append(ga)
        scope_union.sort(key=GroundAtom.sort_key)
        entries = math.prod(ga.pred.range_size for ga in scope_union)
        if entries > config.table_budget:
            raise BudgetExceeded("elimination table", entries, config.table_budget)
        W = np.zeros(tuple(ga.pred.range_size for ga in scope_union))
        pos = {ga: i for i, ga in enumerate(scope_union)}
        for fid in fids:
            scope, table = alive.pop(fid)
            _add_embedded(W, [pos[ga] for ga in scope], table)
        axis = pos[v]
        context = tuple(ga for ga in scope_union if ga != v)
        choice = np.argmax(W, axis=axis)  # smallest maximizing value per context
        message = np.max(W, axis=axis)
        records.append((v, context, choice))
        if context:
            alive[next_id] = (context, message)
            for ga in context:
                by_var[ga].append(next_id)
            next_id += 1
        else:
            constant += float(message)

    constant += sum(float(t) for _, t in alive.values())  # leftover scalars

    assignment: dict = {}
    for v, context, choice in reversed(records):
        idx = tuple(assignment[ga] for ga in context)
        assignment[v] = int(choice[idx])

    recomputed = model_weight(m, assignment)
    tol = max(1e-9, 1e-12 * abs(constant))  # absorbs summation-order error
    if abs(recomputed - constant) > tol:
        raise ConsistencyFailure(
            f"ve weight {constant!r} disagrees with recomputed weight {recomputed!r}"
        )
    elapsed = time.perf_counter() - t0
    return MpeResult(
        assignment,
        float(constant),
        "ve",
        SolveStats(elapsed_s=elapsed, eliminated=len(order), solve_s=elapsed),
    )


ENGINES = {"brute": brute_force_mpe, "ve": ve_max_product}
