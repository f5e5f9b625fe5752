"""Shared helpers: seeded random query/database generators and oracles."""

from __future__ import annotations

import random

import pytest

from minjoin import Atom, ConjunctiveQuery, Database, MinPredicate, Relation


def rand_acyclic_query(
    rng: random.Random,
    *,
    max_atoms: int = 5,
    max_arity: int = 3,
    full: bool = False,
    min_free: int = 1,
) -> ConjunctiveQuery:
    """Random acyclic query, built as a join forest: each new atom shares
    a (possibly empty) subset of one earlier atom's variables."""
    n_atoms = rng.randint(1, max_atoms)
    atoms: list[Atom] = []
    fresh = 0

    def new_var():
        nonlocal fresh
        fresh += 1
        return f"v{fresh}"

    for i in range(n_atoms):
        arity = rng.randint(1, max_arity)
        vars_: list[str] = []
        if atoms:
            parent = rng.choice(atoms)
            n_share = rng.randint(0, min(arity, len(parent.vars)))
            vars_.extend(rng.sample(list(dict.fromkeys(parent.vars)), min(n_share, len(set(parent.vars)))))
        while len(vars_) < arity:
            vars_.append(new_var())
        rng.shuffle(vars_)
        atoms.append(Atom(f"R{i}", tuple(vars_)))

    all_vars = list(dict.fromkeys(v for a in atoms for v in a.vars))
    if full:
        head = tuple(all_vars)
    else:
        k = rng.randint(min(min_free, len(all_vars)), len(all_vars))
        head = tuple(rng.sample(all_vars, k))
    return ConjunctiveQuery(tuple(atoms), head)


def rand_database(
    rng: random.Random,
    q: ConjunctiveQuery,
    *,
    dom: int = 8,
    max_rows: int = 12,
    base_shift: int = 0,
) -> Database:
    rels = {}
    for a in q.atoms:
        if a.symbol in rels:
            continue
        n = rng.randint(0, max_rows)
        rows = [
            tuple(rng.randrange(dom) + base_shift for _ in range(a.arity))
            for _ in range(n)
        ]
        rels[a.symbol] = Relation.from_ints(a.symbol, a.arity, rows)
    return Database(rels)


def rand_predicate(rng: random.Random, q: ConjunctiveQuery, *, strict_ok: bool = True) -> MinPredicate:
    vars_ = list(q.variables)
    x0 = rng.choice(vars_)
    k = rng.randint(1, min(3, len(vars_)))
    xs = tuple(rng.sample(vars_, k))
    strict = strict_ok and x0 not in xs and rng.random() < 0.3
    return MinPredicate(x0, xs, strict=strict)


@pytest.fixture
def rng():
    return random.Random(20260810)
