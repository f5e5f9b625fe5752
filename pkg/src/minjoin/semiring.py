"""Bottom-up semiring aggregation over rooted join trees.

One pass computes, for every tuple t of every node relation, the fold
agg(t) = PLUS over partial answers of the subtree below t of the TIMES
over their tuples' val(.) values. Counting, maximum co-joined value, and
max-min thresholds are instances.
"""

from __future__ import annotations

import operator
import random
from dataclasses import dataclass
from typing import Callable, Iterable

from .errors import EngineError, SemiringLawError
from .instrument import StepCounter
from .model import Atom, ConjunctiveQuery, Database, Row, TaggedValue
from .structure import RootedJoinTree, tree_for_query


class _Extreme:
    """Orderless infinity sentinel; all handling lives in the operators."""

    __slots__ = ("label",)

    def __init__(self, label: str):
        self.label = label

    def __repr__(self):
        return self.label


NEG_INF = _Extreme("-inf")
POS_INF = _Extreme("+inf")


@dataclass(frozen=True)
class Semiring:
    """Commutative semiring: (carrier, plus, times, zero, one)."""

    name: str
    plus: Callable
    times: Callable
    zero: object
    one: object

    def __repr__(self):
        return f"Semiring({self.name})"


def _max_plus(a, b):
    if a is NEG_INF:
        return b
    if b is NEG_INF:
        return a
    if a is POS_INF or b is POS_INF:
        return POS_INF
    return a if a >= b else b


def _min_times(a, b):
    if a is NEG_INF or b is NEG_INF:
        return NEG_INF
    if a is POS_INF:
        return b
    if b is POS_INF:
        return a
    return a if a <= b else b


def _shift_times(a, b):
    # componentwise addition on tagged values; -inf absorbs
    if a is NEG_INF or b is NEG_INF:
        return NEG_INF
    return TaggedValue(a.base + b.base, a.rank + b.rank)


COUNTING = Semiring("counting", operator.add, operator.mul, 0, 1)
MAX_MIN = Semiring("max-min", _max_plus, _min_times, NEG_INF, POS_INF)
MAX_TROPICAL = Semiring("max-tropical", _max_plus, _shift_times, NEG_INF, TaggedValue(0, 0))
MIN_TROPICAL = Semiring(
    "min-tropical",
    lambda a, b: b if a is POS_INF else a if b is POS_INF else (a if a <= b else b),
    lambda a, b: POS_INF if (a is POS_INF or b is POS_INF) else TaggedValue(a.base + b.base, a.rank + b.rank),
    POS_INF,
    TaggedValue(0, 0),
)


def check_semiring_laws(s: Semiring, samples, rng: random.Random | None = None) -> None:
    """Sample-based law check; catches wiring mistakes, not a proof."""
    rng = rng or random.Random(0)
    pool = list(samples) + [s.zero, s.one]
    if len(pool) < 3:
        return
    for _ in range(64):
        a, b, c = (rng.choice(pool) for _ in range(3))
        if s.plus(a, b) != s.plus(b, a) or s.times(a, b) != s.times(b, a):
            raise SemiringLawError(f"{s.name}: commutativity fails on {a!r},{b!r}")
        if s.plus(s.plus(a, b), c) != s.plus(a, s.plus(b, c)):
            raise SemiringLawError(f"{s.name}: plus associativity fails")
        if s.times(s.times(a, b), c) != s.times(a, s.times(b, c)):
            raise SemiringLawError(f"{s.name}: times associativity fails")
        if s.times(a, s.plus(b, c)) != s.plus(s.times(a, b), s.times(a, c)):
            raise SemiringLawError(f"{s.name}: distributivity fails on {a!r},{b!r},{c!r}")
        if s.plus(a, s.zero) != a or s.times(a, s.one) != a:
            raise SemiringLawError(f"{s.name}: identity fails on {a!r}")
        if s.times(a, s.zero) != s.zero:
            raise SemiringLawError(f"{s.name}: zero not absorbing on {a!r}")


# ---------------------------------------------------------------------------
# Materialization and aggregation


def materialize(q: ConjunctiveQuery, db: Database, t: RootedJoinTree):
    """Rows and schema per tree node; relaxed nodes project their host.

    Returns (rows_of, schema_of): dicts keyed by node id.
    """
    rows_of: dict[int, list[Row]] = {}
    schema_of: dict[int, tuple[str, ...]] = {}
    pending = []
    for n in t.nodes():
        ai = t.atom_of[n]
        if ai is None:
            pending.append(n)
            continue
        atom = q.atoms[ai]
        rows_of[n] = list(db.relation(atom.symbol).rows)
        schema_of[n] = atom.vars
    for n in pending:
        host = t.relaxed_host.get(n)
        if host is None or host not in rows_of:
            raise EngineError(f"relaxed node {n} lacks a materialized host")
        hschema = schema_of[host]
        keep = sorted(t.vars_of[n])
        idx = tuple(hschema.index(v) for v in keep)
        rows_of[n] = list(dict.fromkeys(tuple(r[i] for i in idx) for r in rows_of[host]))
        schema_of[n] = tuple(keep)
    return rows_of, schema_of


class AggAnnotation:
    """agg values per (node, tuple), stored as lists parallel to the rows."""

    def __init__(self, rows_of, schema_of, values_of):
        self.rows_of: dict[int, list[Row]] = rows_of
        self.schema_of: dict[int, tuple[str, ...]] = schema_of
        self.values_of: dict[int, list] = values_of
        self._index: dict[int, dict[Row, object]] | None = None

    def value(self, node: int, row: Row):
        if self._index is None:
            self._index = {
                n: dict(zip(rows, self.values_of[n])) for n, rows in self.rows_of.items()
            }
        return self._index[node][row]

    def __getitem__(self, key):
        node, row = key
        return self.value(node, row)

    def as_map(self, node: int) -> dict[Row, object]:
        return dict(zip(self.rows_of[node], self.values_of[node]))


def aggregate_bottom_up(
    q: ConjunctiveQuery,
    db: Database,
    t: RootedJoinTree,
    val: Callable[[int, Row], object],
    s: Semiring,
    *,
    check_laws: bool = False,
    counter: StepCounter | None = None,
) -> AggAnnotation:
    """Children-to-parent message passing over the join tree.

    Each child relation is grouped into join buckets keyed by the
    variables shared with its parent; bucket messages fold with PLUS and
    a tuple combines its received messages with its own val via TIMES.
    Linear in the database size.
    """
    if not q.is_self_join_free:
        raise EngineError("aggregation requires a self-join-free query")
    rows_of, schema_of = materialize(q, db, t)
    plus, times, zero = s.plus, s.times, s.zero

    values_of: dict[int, list] = {}
    messages: dict[int, dict] = {}  # child id -> {key: folded message}
    order = t.bfs_order()
    children = t.children()
    sample_pool: list = []

    for n in reversed(order):
        rows = rows_of[n]
        schema = schema_of[n]
        vals = [val(n, r) for r in rows]
        if check_laws and len(sample_pool) < 32:
            sample_pool.extend(vals[:8])
        for c in children[n]:
            shared = sorted(t.vars_of[n] & t.vars_of[c])
            idx = tuple(schema.index(v) for v in shared)
            cmsg = messages.pop(c)
            if idx:
                for i, r in enumerate(rows):
                    m = cmsg.get(tuple(r[j] for j in idx), zero)
                    vals[i] = times(vals[i], m)
            else:
                m = cmsg.get((), zero)
                vals = [times(v, m) for v in vals]
        values_of[n] = vals
        if counter is not None:
            counter.add(len(rows))
        if n != t.root:
            p = t.parent[n]
            shared = sorted(t.vars_of[n] & t.vars_of[p])
            idx = tuple(schema.index(v) for v in shared)
            msg: dict = {}
            for r, v in zip(rows, vals):
                key = tuple(r[j] for j in idx)
                prev = msg.get(key)
                msg[key] = v if prev is None else plus(prev, v)
            messages[n] = msg
            if counter is not None:
                counter.add(len(rows))

    if check_laws:
        check_semiring_laws(s, sample_pool)
    return AggAnnotation(rows_of, schema_of, values_of)


# ---------------------------------------------------------------------------
# Instantiations


def count_answers(
    q: ConjunctiveQuery,
    db: Database,
    *,
    tree: RootedJoinTree | None = None,
    counter: StepCounter | None = None,
) -> int:
    """|Q(D)| for a full acyclic self-join-free query."""
    if not q.is_full:
        raise EngineError("count_answers expects a full query")
    t = tree if tree is not None else tree_for_query(q)
    ann = aggregate_bottom_up(q, db, t, lambda n, r: 1, COUNTING, counter=counter)
    return sum(ann.values_of[t.root])


def _cojoined_extremum(q, y, alpha, db, *, minimize: bool):
    if isinstance(alpha, Atom):
        alpha_idx = q.atoms.index(alpha)
    else:
        alpha_idx = next((i for i, a in enumerate(q.atoms) if a.symbol == alpha), None)
        if alpha_idx is None:
            raise EngineError(f"atom {alpha!r} not in the query")
    if y not in q.variables:
        raise EngineError(f"variable {y!r} not in the query")
    t = tree_for_query(q)
    node = next(n for n in t.nodes() if t.atom_of[n] == alpha_idx)
    t = t.reroot(node)
    carrier_atom = alpha_idx if y in q.atoms[alpha_idx].vars else next(
        i for i, a in enumerate(q.atoms) if y in a.vars
    )
    ycol = q.atoms[carrier_atom].vars.index(y)
    s = MIN_TROPICAL if minimize else MAX_TROPICAL

    def val(n, row):
        if t.atom_of[n] == carrier_atom:
            return row[ycol]
        return s.one

    ann = aggregate_bottom_up(q, db, t, val, s)
    return ann.as_map(node)


def max_cojoined_value(q: ConjunctiveQuery, y: str, alpha, db: Database) -> dict[Row, object]:
    """For each tuple of `alpha`: the maximum y value over all answers of
    the all-free query extending it; -inf for tuples joining with nothing."""
    qf = ConjunctiveQuery(q.atoms, q.variables, q.name)
    return _cojoined_extremum(qf, y, alpha, db, minimize=False)


def min_cojoined_value(q: ConjunctiveQuery, y: str, alpha, db: Database) -> dict[Row, object]:
    """Mirror of max_cojoined_value; +inf for dangling tuples."""
    qf = ConjunctiveQuery(q.atoms, q.variables, q.name)
    return _cojoined_extremum(qf, y, alpha, db, minimize=True)


def thresholds(
    q: ConjunctiveQuery,
    xr: Iterable[str],
    t: RootedJoinTree,
    db: Database,
    *,
    counter: StepCounter | None = None,
) -> AggAnnotation:
    """Max-min aggregation: per tuple, the best (largest) value that the
    minimum over `xr` can reach among the partial answers below it.

    val(t) is the minimum over the xr-variables present in that relation,
    +inf when none occurs there.
    """
    if not q.is_full:
        raise EngineError("thresholds expects a full query")
    xr = frozenset(xr)
    rows_cols: dict[int, tuple[int, ...]] = {}
    for n in t.nodes():
        ai = t.atom_of[n]
        schema = q.atoms[ai].vars if ai is not None else tuple(sorted(t.vars_of[n]))
        rows_cols[n] = tuple(i for i, v in enumerate(schema) if v in xr)

    def val(n, row):
        cols = rows_cols[n]
        if not cols:
            return POS_INF
        return min(row[i] for i in cols)

    return aggregate_bottom_up(q, db, t, val, MAX_MIN, counter=counter)
