"""Small models used across the test-suite, the benchmarks and the docs.

All tables are seeded, so every fixture is fully deterministic. Structure
matters here, not the weights: the symbolic machinery never reads tables.
"""

from __future__ import annotations

import numpy as np

from .core import (
    Atom,
    Constraint,
    Domain,
    Model,
    Parfactor,
    PotentialTable,
    Predicate,
    Var,
)


def _random_table(shape, seed) -> PotentialTable:
    rng = np.random.default_rng(seed)
    return PotentialTable.from_linear(rng.uniform(0.05, 0.95, size=shape))


def smokers(domain_size: int = 2) -> Model:
    """smokes(X), drinks(Y), friends(X, Y) under X != Y."""
    names = ("alice", "bob", "carol", "dave", "erin")
    if domain_size <= len(names):
        person = Domain.named("Person", names[:domain_size])
    else:
        person = Domain("Person", domain_size)
    smokes = Predicate("smokes", (person,), 2)
    drinks = Predicate("drinks", (person,), 2)
    friends = Predicate("friends", (person, person), 2)
    x, y = Var("X", person), Var("Y", person)
    table = PotentialTable.from_linear([0.2, 0.8, 0.5, 0.5, 0.9, 0.1, 0.3, 0.7], (2, 2, 2))
    g = Parfactor(
        (x, y),
        Constraint.of((x, y)),
        (Atom(smokes, (x,)), Atom(drinks, (y,)), Atom(friends, (x, y))),
        table,
    )
    return Model((person,), (smokes, drinks, friends), (g,))


def friends_knows(domain_size: int = 3, seed: int = 7) -> Model:
    """fr(Y, X), fr(Z, X), k(Y, Z): recurring formulas in one parfactor."""
    dom = Domain("Person", domain_size)
    fr = Predicate("fr", (dom, dom), 2)
    k = Predicate("k", (dom, dom), 2)
    x, y, z = Var("X", dom), Var("Y", dom), Var("Z", dom)
    g = Parfactor(
        (x, y, z),
        Constraint.EMPTY,
        (Atom(fr, (y, x)), Atom(fr, (z, x)), Atom(k, (y, z))),
        _random_table((2, 2, 2), seed),
    )
    return Model((dom,), (fr, k), (g,))


def three_independent(domain_size: int = 3, seed: int = 11) -> Model:
    """a(X), b(Y), c(Z): no recurring formulas, fully reducible."""
    dom = Domain("D", domain_size)
    a = Predicate("a", (dom,), 2)
    b = Predicate("b", (dom,), 2)
    c = Predicate("c", (dom,), 2)
    x, y, z = Var("X", dom), Var("Y", dom), Var("Z", dom)
    g = Parfactor(
        (x, y, z),
        Constraint.EMPTY,
        (Atom(a, (x,)), Atom(b, (y,)), Atom(c, (z,))),
        _random_table((2, 2, 2), seed),
    )
    return Model((dom,), (a, b, c), (g,))


def shared_unary(domain_size: int = 3, seed: int = 13) -> Model:
    """p(X), p(Y), q(Z) and p(X), r(X), q(Z): multi-parfactor detection."""
    dom = Domain("D", domain_size)
    p = Predicate("p", (dom,), 2)
    q = Predicate("q", (dom,), 2)
    r = Predicate("r", (dom,), 2)
    x, y, z = Var("X", dom), Var("Y", dom), Var("Z", dom)
    g1 = Parfactor(
        (x, y, z),
        Constraint.EMPTY,
        (Atom(p, (x,)), Atom(p, (y,)), Atom(q, (z,))),
        _random_table((2, 2, 2), seed),
    )
    g2 = Parfactor(
        (x, z),
        Constraint.EMPTY,
        (Atom(p, (x,)), Atom(r, (x,)), Atom(q, (z,))),
        _random_table((2, 2, 2), seed + 1),
    )
    return Model((dom,), (p, q, r), (g1, g2))


def ring_pair(domain_size: int = 3, seed: int = 17) -> Model:
    """p(X,Y), q(Y,Z), r(Z,X), s(X,Z) plus s(X,V), s(X,W), p(X,Y)."""
    dom = Domain("D", domain_size)
    p = Predicate("p", (dom, dom), 2)
    q = Predicate("q", (dom, dom), 2)
    r = Predicate("r", (dom, dom), 2)
    s = Predicate("s", (dom, dom), 2)
    x, y, z = Var("X", dom), Var("Y", dom), Var("Z", dom)
    v, w = Var("V", dom), Var("W", dom)
    g1 = Parfactor(
        (x, y, z),
        Constraint.EMPTY,
        (Atom(p, (x, y)), Atom(q, (y, z)), Atom(r, (z, x)), Atom(s, (x, z))),
        _random_table((2, 2, 2, 2), seed),
    )
    g2 = Parfactor(
        (x, v, w, y),
        Constraint.EMPTY,
        (Atom(s, (x, v)), Atom(s, (x, w)), Atom(p, (x, y))),
        _random_table((2, 2, 2), seed + 1),
    )
    return Model((dom,), (p, q, r, s), (g1, g2))


def no_ua_pair(domain_size: int = 3, seed: int = 19) -> Model:
    """p(X), q(X) and p(X), q(Y): every fusion overlaps, nothing reduces."""
    dom = Domain("D", domain_size)
    p = Predicate("p", (dom,), 2)
    q = Predicate("q", (dom,), 2)
    x, y = Var("X", dom), Var("Y", dom)
    g1 = Parfactor(
        (x,), Constraint.EMPTY, (Atom(p, (x,)), Atom(q, (x,))), _random_table((2, 2), seed)
    )
    g2 = Parfactor(
        (x, y), Constraint.EMPTY, (Atom(p, (x,)), Atom(q, (y,))), _random_table((2, 2), seed + 1)
    )
    return Model((dom,), (p, q), (g1, g2))


def diag_overlap(domain_size: int = 3, seed: int = 23) -> Model:
    """p(X,Y), q(Y) against p(X,X): shattering splits the first parfactor."""
    dom = Domain("D", domain_size)
    p = Predicate("p", (dom, dom), 2)
    q = Predicate("q", (dom,), 2)
    x, y = Var("X", dom), Var("Y", dom)
    g1 = Parfactor(
        (x, y),
        Constraint.EMPTY,
        (Atom(p, (x, y)), Atom(q, (y,))),
        _random_table((2, 2), seed),
    )
    g2 = Parfactor((x,), Constraint.EMPTY, (Atom(p, (x, x)),), _random_table((2,), seed + 1))
    return Model((dom,), (p, q), (g1, g2))


def constrained_chain(domain_size: int = 3, seed: int = 29) -> Model:
    """p(X), q(Y), r(Z), s(W) under X != Y and Y != Z: effect-scope chaining."""
    dom = Domain("D", domain_size)
    p = Predicate("p", (dom,), 2)
    q = Predicate("q", (dom,), 2)
    r = Predicate("r", (dom,), 2)
    s = Predicate("s", (dom,), 2)
    x, y, z, w = Var("X", dom), Var("Y", dom), Var("Z", dom), Var("W", dom)
    g = Parfactor(
        (x, y, z, w),
        Constraint.of((x, y), (y, z)),
        (Atom(p, (x,)), Atom(q, (y,)), Atom(r, (z,)), Atom(s, (w,))),
        _random_table((2, 2, 2, 2), seed),
    )
    return Model((dom,), (p, q, r, s), (g,))


def wide_positions(domain_size: int = 2, seed: int = 31) -> Model:
    """p(X,Z,Y), p(Z,U,Y), q(S,W), q(S,T), r(S): the overlap-set exercise."""
    dom = Domain("D", domain_size)
    p = Predicate("p", (dom, dom, dom), 2)
    q = Predicate("q", (dom, dom), 2)
    r = Predicate("r", (dom,), 2)
    x, y, z, u = Var("X", dom), Var("Y", dom), Var("Z", dom), Var("U", dom)
    s, w, t = Var("S", dom), Var("W", dom), Var("T", dom)
    g = Parfactor(
        (x, z, y, u, s, w, t),
        Constraint.EMPTY,
        (
            Atom(p, (x, z, y)),
            Atom(p, (z, u, y)),
            Atom(q, (s, w)),
            Atom(q, (s, t)),
            Atom(r, (s,)),
        ),
        _random_table((2, 2, 2, 2, 2), seed),
    )
    return Model((dom,), (p, q, r), (g,))


def exponent_pair(domain_size: int = 3, seed: int = 37) -> Model:
    """p(X), q(Y) under X != Y: reduction exponent |X| - 1."""
    dom = Domain("D", domain_size)
    p = Predicate("p", (dom,), 2)
    q = Predicate("q", (dom,), 2)
    x, y = Var("X", dom), Var("Y", dom)
    g = Parfactor(
        (x, y),
        Constraint.of((x, y)),
        (Atom(p, (x,)), Atom(q, (y,))),
        _random_table((2, 2), seed),
    )
    return Model((dom,), (p, q), (g,))


FIXTURES = {
    "smokers": smokers,
    "friends_knows": friends_knows,
    "three_independent": three_independent,
    "shared_unary": shared_unary,
    "ring_pair": ring_pair,
    "no_ua_pair": no_ua_pair,
    "diag_overlap": diag_overlap,
    "constrained_chain": constrained_chain,
    "wide_positions": wide_positions,
    "exponent_pair": exponent_pair,
}


def fixture(name: str, domain_size: int | None = None) -> Model:
    builder = FIXTURES[name]
    return builder() if domain_size is None else builder(domain_size)
