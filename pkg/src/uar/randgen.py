"""Seeded random model generation for benchmarks and property tests.

An n-parfactor model draws each of its 3 atoms per parfactor uniformly from a
pool of 2n unary boolean predicates over one shared domain, with at most 3
logical variables per parfactor and table entries strictly inside (0, 1).
"""

from __future__ import annotations

import numpy as np

from .core import Atom, Constraint, Domain, Model, Parfactor, PotentialTable, Predicate, Var

ATOMS_PER_PARFACTOR = 3
MAX_VARS_PER_PARFACTOR = 3


def gen_random(n_parfactors: int, domain_size: int, seed: int) -> Model:
    if n_parfactors < 1:
        raise ValueError("need at least one parfactor")
    if domain_size < 1:
        raise ValueError("domain size must be >= 1")
    rng = np.random.default_rng(seed)
    dom = Domain("D", domain_size)
    pool = tuple(
        Predicate(f"p{i}", (dom,), 2) for i in range(2 * n_parfactors)
    )
    slots = tuple(Var(f"X{i + 1}", dom) for i in range(MAX_VARS_PER_PARFACTOR))

    parfactors = []
    for _ in range(n_parfactors):
        pred_picks = rng.integers(0, len(pool), size=ATOMS_PER_PARFACTOR)
        var_picks = rng.integers(0, MAX_VARS_PER_PARFACTOR, size=ATOMS_PER_PARFACTOR)
        atoms = tuple(
            Atom(pool[p], (slots[v],)) for p, v in zip(pred_picks, var_picks)
        )
        used = []
        for _, v in zip(pred_picks, var_picks):
            if slots[v] not in used:
                used.append(slots[v])
        shape = tuple(a.pred.range_size for a in atoms)
        values = rng.uniform(size=shape)
        while ((values <= 0.0) | (values >= 1.0)).any():  # open interval only
            redo = (values <= 0.0) | (values >= 1.0)
            values[redo] = rng.uniform(size=int(redo.sum()))
        parfactors.append(
            Parfactor(tuple(used), Constraint.EMPTY, atoms, PotentialTable.from_linear(values))
        )
    return Model((dom,), pool, tuple(parfactors))
