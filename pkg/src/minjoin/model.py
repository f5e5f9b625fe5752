"""Core data model: values, relations, databases, queries, predicates.

Every algorithm in the engine works over these types. Databases are
immutable after construction and safe to share across threads; the
transformations here (self-join removal, domain disjointification,
negation) return new databases instead of mutating.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple

from .errors import EngineError

Row = tuple  # tuple[TaggedValue, ...]


class TaggedValue(NamedTuple):
    """A domain value paired with a variable rank.

    Rank 0 is reserved for untagged data; a disjointified database gives
    each variable a distinct rank >= 1 so two distinct variables can never
    be assigned equal values. The total order is lexicographic (base,
    then rank), which NamedTuple comparison provides directly.
    """

    base: int
    rank: int = 0

    def untagged(self) -> "TaggedValue":
        return TaggedValue(self.base, 0) if self.rank else self

    def __repr__(self):
        return f"{self.base}r{self.rank}" if self.rank else str(self.base)


@dataclass(frozen=True)
class Relation:
    """A named, set-semantics relation over TaggedValue rows.

    Duplicate rows are dropped on construction (first occurrence kept);
    every row must have exactly `arity` entries.
    """

    symbol: str
    arity: int
    rows: tuple[Row, ...]

    def __post_init__(self):
        if self.arity < 0:
            raise EngineError(f"relation {self.symbol}: negative arity")
        deduped = tuple(dict.fromkeys(self.rows))
        for r in deduped:
            if len(r) != self.arity:
                raise EngineError(
                    f"relation {self.symbol}: row {r} has {len(r)} entries, arity is {self.arity}"
                )
        object.__setattr__(self, "rows", deduped)

    def __len__(self):
        return len(self.rows)

    @classmethod
    def from_ints(cls, symbol: str, arity: int, rows: Iterable[Iterable[int]]) -> "Relation":
        return cls(symbol, arity, tuple(tuple(TaggedValue(c) for c in r) for r in rows))


@dataclass(frozen=True)
class Database:
    """Map from relation symbol to relation; |D| is the total tuple count."""

    relations: Mapping[str, Relation]

    def __post_init__(self):
        object.__setattr__(self, "relations", dict(self.relations))
        for sym, rel in self.relations.items():
            if rel.symbol != sym:
                raise EngineError(f"database key {sym!r} bound to relation {rel.symbol!r}")

    @property
    def size(self) -> int:
        return sum(len(r) for r in self.relations.values())

    def relation(self, symbol: str) -> Relation:
        try:
            return self.relations[symbol]
        except KeyError:
            raise EngineError(f"no relation named {symbol!r}") from None

    def replace(self, *relations: Relation) -> "Database":
        new = dict(self.relations)
        for rel in relations:
            new[rel.symbol] = rel
        return Database(new)


@dataclass(frozen=True)
class Atom:
    symbol: str
    vars: tuple[str, ...]

    @property
    def arity(self) -> int:
        return len(self.vars)

    def __str__(self):
        return f"{self.symbol}({','.join(self.vars)})"


@dataclass(frozen=True)
class ConjunctiveQuery:
    """A conjunctive query: head over free variables, body of atoms.

    `free_vars` keeps head order; `variables` lists free variables first
    and then remaining body variables in first-occurrence order, which is
    the declaration order used for every deterministic tie-break in the
    engine.
    """

    atoms: tuple[Atom, ...]
    free_vars: tuple[str, ...]
    name: str = "Q"

    def __post_init__(self):
        if not self.atoms:
            raise EngineError("query has no atoms")
        body = {v for a in self.atoms for v in a.vars}
        if len(set(self.free_vars)) != len(self.free_vars):
            raise EngineError("duplicate variable in head")
        for v in self.free_vars:
            if v not in body:
                raise EngineError(f"head variable {v!r} does not occur in the body")

    @property
    def variables(self) -> tuple[str, ...]:
        seen = dict.fromkeys(self.free_vars)
        for a in self.atoms:
            for v in a.vars:
                seen.setdefault(v)
        return tuple(seen)

    @property
    def existential_vars(self) -> tuple[str, ...]:
        free = set(self.free_vars)
        return tuple(v for v in self.variables if v not in free)

    @property
    def is_full(self) -> bool:
        return set(self.free_vars) == set(self.variables)

    @property
    def is_boolean(self) -> bool:
        return not self.free_vars

    @property
    def is_self_join_free(self) -> bool:
        syms = [a.symbol for a in self.atoms]
        return len(syms) == len(set(syms))

    def atom_for_symbol(self, symbol: str) -> Atom:
        for a in self.atoms:
            if a.symbol == symbol:
                return a
        raise EngineError(f"no atom over {symbol!r}")

    def to_text(self) -> str:
        head = f"{self.name}({','.join(self.free_vars)})"
        return f"{head} :- {', '.join(map(str, self.atoms))}."

    def __str__(self):
        return self.to_text()


@dataclass(frozen=True)
class MinPredicate:
    """Condition `x0 <= min X` (non-strict) or `x0 < min X` (strict).

    The strict variant requires x0 to be strictly below every member of
    X, and x0 must not belong to X.
    """

    x0: str
    xs: tuple[str, ...]
    strict: bool = False

    def __post_init__(self):
        if not self.xs:
            raise EngineError("predicate needs a non-empty variable set")
        if len(set(self.xs)) != len(self.xs):
            raise EngineError("duplicate variable in predicate set")
        if self.strict and self.x0 in self.xs:
            raise EngineError("strict predicate requires x0 outside the MIN set")

    def check_vars(self, q: ConjunctiveQuery) -> None:
        qvars = set(q.variables)
        for v in (self.x0, *self.xs):
            if v not in qvars:
                raise EngineError(f"predicate variable {v!r} not in the query")

    def holds(self, assignment: Mapping[str, TaggedValue]) -> bool:
        v0 = assignment[self.x0]
        if self.strict:
            return all(v0 < assignment[x] for x in self.xs)
        return all(v0 <= assignment[x] for x in self.xs)

    def __str__(self):
        op = "<" if self.strict else "<="
        return f"{self.x0} {op} MIN({','.join(self.xs)})"


@dataclass(frozen=True)
class MinRanking:
    """Order answers by min (or max) over a variable set."""

    xs: tuple[str, ...]
    maximize: bool = False

    def __post_init__(self):
        if not self.xs:
            raise EngineError("ranking needs a non-empty variable set")
        if len(set(self.xs)) != len(self.xs):
            raise EngineError("duplicate variable in ranking set")

    def key(self, assignment: Mapping[str, TaggedValue]) -> TaggedValue:
        vals = [assignment[x] for x in self.xs]
        return max(vals) if self.maximize else min(vals)

    def __str__(self):
        return f"{'MAX' if self.maximize else 'MIN'}({','.join(self.xs)})"


class Answer:
    """An assignment of the free variables, hashable and order-insensitive."""

    __slots__ = ("_items",)

    def __init__(self, assignment: Mapping[str, TaggedValue]):
        self._items = tuple(sorted(assignment.items()))

    @property
    def assignment(self) -> dict[str, TaggedValue]:
        return dict(self._items)

    def __getitem__(self, var: str) -> TaggedValue:
        for k, v in self._items:
            if k == var:
                return v
        raise KeyError(var)

    def keys(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self._items)

    def untagged(self) -> "Answer":
        return Answer({k: v.untagged() for k, v in self._items})

    def project(self, vars: Iterable[str]) -> "Answer":
        keep = set(vars)
        return Answer({k: v for k, v in self._items if k in keep})

    def __eq__(self, other):
        return isinstance(other, Answer) and self._items == other._items

    def __hash__(self):
        return hash(self._items)

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self._items)
        return f"Answer({inner})"


# ---------------------------------------------------------------------------
# Domain transformations


def fresh_symbol(base: str, taken: set[str]) -> str:
    """Deterministically uniquify `base` against `taken` (and reserve it)."""
    name = base
    n = 1
    while name in taken:
        n += 1
        name = f"{base}_{n}"
    taken.add(name)
    return name


def remove_self_joins(q: ConjunctiveQuery, db: Database) -> tuple[ConjunctiveQuery, Database]:
    """Give each repeated relation symbol a fresh copy so no symbol repeats.

    Answer sets are unchanged; queries already free of self-joins are
    returned as-is (same objects).
    """
    if q.is_self_join_free:
        return q, db
    counts: dict[str, int] = {}
    for a in q.atoms:
        counts[a.symbol] = counts.get(a.symbol, 0) + 1
    taken = set(db.relations) | {a.symbol for a in q.atoms}
    new_atoms = []
    new_rels = dict(db.relations)
    occurrence: dict[str, int] = {}
    for a in q.atoms:
        if counts[a.symbol] == 1:
            new_atoms.append(a)
            continue
        occurrence[a.symbol] = occurrence.get(a.symbol, 0) + 1
        sym = fresh_symbol(f"{a.symbol}_{occurrence[a.symbol]}", taken)
        src = db.relation(a.symbol)
        new_rels[sym] = Relation(sym, src.arity, src.rows)
        new_atoms.append(Atom(sym, a.vars))
    for sym, n in counts.items():
        if n > 1:
            del new_rels[sym]
    return (
        ConjunctiveQuery(tuple(new_atoms), q.free_vars, q.name),
        Database(new_rels),
    )


def disjointify(db: Database, q: ConjunctiveQuery, rank_order: Iterable[str]) -> Database:
    """Tag every cell with its variable's rank so variable domains are disjoint.

    `rank_order` lists variables from smallest to largest rank (ranks start
    at 1). The rewrite preserves the relative order of distinct base values
    across any two columns, and makes all cross-variable comparisons strict.
    """
    if not q.is_self_join_free:
        raise EngineError("disjointify requires a self-join-free query")
    ranks = {v: i + 1 for i, v in enumerate(rank_order)}
    for v in q.variables:
        if v not in ranks:
            raise EngineError(f"rank order misses variable {v!r}")
    cache: dict[tuple[int, int], TaggedValue] = {}

    def tag(cell: TaggedValue, rank: int) -> TaggedValue:
        key = (cell.base, rank)
        got = cache.get(key)
        if got is None:
            got = cache[key] = TaggedValue(cell.base, rank)
        return got

    new_rels = {}
    for a in q.atoms:
        rel = db.relation(a.symbol)
        col_ranks = tuple(ranks[v] for v in a.vars)
        rows = []
        for row in rel.rows:
            for cell in row:
                if cell.rank:
                    raise EngineError("disjointify expects an untagged database")
            rows.append(tuple(tag(c, r) for c, r in zip(row, col_ranks)))
        new_rels[a.symbol] = Relation(a.symbol, rel.arity, tuple(rows))
    # relations not referenced by the query pass through untouched
    for sym, rel in db.relations.items():
        new_rels.setdefault(sym, rel)
    return Database(new_rels)


def untag_database(db: Database) -> Database:
    """Strip all ranks (inverse of disjointify on the base components)."""
    new_rels = {
        sym: Relation(sym, rel.arity, tuple(tuple(c.untagged() for c in row) for row in rel.rows))
        for sym, rel in db.relations.items()
    }
    return Database(new_rels)


def negate_database(db: Database) -> Database:
    """Negate every base value; turns MAX problems into MIN problems."""
    new_rels = {
        sym: Relation(
            sym, rel.arity, tuple(tuple(TaggedValue(-c.base, c.rank) for c in row) for row in rel.rows)
        )
        for sym, rel in db.relations.items()
    }
    return Database(new_rels)
