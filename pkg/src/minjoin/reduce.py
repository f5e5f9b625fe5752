"""Semijoin reduction, restriction to free variables, and elimination of
predicate inequalities that touch existential variables.

The existential eliminations here filter tuples of carefully chosen
relations. A filter on relation R is sound only when the predicate's
truth, restricted to answers through a tuple of R, is a function of that
tuple alone; the interface-atom analysis below identifies exactly those
relations. Configurations without a sound filtering site are refused
with UnsupportedPredicateError instead of being answered incorrectly.
"""

from __future__ import annotations

from .errors import EngineError, UnsupportedPredicateError
from .model import (
    Atom,
    ConjunctiveQuery,
    Database,
    MinPredicate,
    Relation,
    fresh_symbol,
)
from .semiring import NEG_INF, POS_INF, max_cojoined_value, min_cojoined_value, thresholds
from .structure import RootedJoinTree, hypergraph_of, is_free_connex, join_tree, tree_for_query


def semijoin_reduce(
    q: ConjunctiveQuery, db: Database, t: RootedJoinTree | None = None
) -> Database:
    """Full Yannakakis reducer: bottom-up then top-down semijoin passes.

    Afterwards every remaining tuple participates in at least one answer
    of the full query; the answer set is unchanged. Nodes glued across
    connected components key on the empty tuple, so emptiness propagates
    between components as it must.
    """
    if not q.is_self_join_free:
        raise EngineError("semijoin reduction requires a self-join-free query")
    t = t if t is not None else tree_for_query(q)
    schema = {n: q.atoms[t.atom_of[n]].vars for n in t.nodes()}
    rows = {n: list(db.relation(q.atoms[t.atom_of[n]].symbol).rows) for n in t.nodes()}

    def key_cols(n: int, other: int) -> tuple[int, ...]:
        shared = sorted(t.vars_of[n] & t.vars_of[other])
        return tuple(schema[n].index(v) for v in shared)

    order = t.bfs_order()
    for n in reversed(order):
        p = t.parent[n]
        if p is None:
            continue
        cn = key_cols(n, p)
        cp = key_cols(p, n)
        keys = {tuple(r[i] for i in cn) for r in rows[n]}
        rows[p] = [r for r in rows[p] if tuple(r[i] for i in cp) in keys]
    for n in order:
        p = t.parent[n]
        if p is None:
            continue
        cn = key_cols(n, p)
        cp = key_cols(p, n)
        keys = {tuple(r[i] for i in cp) for r in rows[p]}
        rows[n] = [r for r in rows[n] if tuple(r[i] for i in cn) in keys]

    out = dict(db.relations)
    for n in t.nodes():
        atom = q.atoms[t.atom_of[n]]
        out[atom.symbol] = Relation(atom.symbol, atom.arity, tuple(rows[n]))
    return Database(out)


def restrict_to_free(q: ConjunctiveQuery, db: Database) -> tuple[ConjunctiveQuery, Database]:
    """Rewrite an acyclic free-connex query to a full one over its free
    variables, with fresh relation symbols and the same answer set.

    Relations are fully reduced first, then projected per-atom; atoms left
    with no free variables are dropped (their only residual effect,
    emptiness, has already propagated through the reduction).
    """
    if q.is_boolean:
        raise EngineError("cannot restrict a Boolean query to free variables")
    if not is_free_connex(q):
        raise EngineError("restriction requires an acyclic free-connex query")
    if not q.is_self_join_free:
        raise EngineError("remove self-joins before restricting")

    reduced = semijoin_reduce(q, db)
    empty = any(len(reduced.relation(a.symbol)) == 0 for a in q.atoms)
    free = set(q.free_vars)
    taken = set(db.relations) | {a.symbol for a in q.atoms}
    new_atoms: list[Atom] = []
    new_rels: dict[str, Relation] = {}
    for a in q.atoms:
        keep_cols = tuple(i for i, v in enumerate(a.vars) if v in free)
        if not keep_cols:
            continue
        sym = fresh_symbol(f"{a.symbol}_f", taken)
        vars_ = tuple(a.vars[i] for i in keep_cols)
        if empty:
            rows: tuple = ()
        else:
            src = reduced.relation(a.symbol).rows
            rows = tuple(dict.fromkeys(tuple(r[i] for i in keep_cols) for r in src))
        new_atoms.append(Atom(sym, vars_))
        new_rels[sym] = Relation(sym, len(vars_), rows)
    q2 = ConjunctiveQuery(tuple(new_atoms), q.free_vars, q.name)
    return q2, Database(new_rels)


# ---------------------------------------------------------------------------
# Interface decomposition: where may an existential inequality be filtered?


def _interface_groups(q: ConjunctiveQuery):
    """Partition existential variables by the join-tree branch that hosts
    them once a free-variables node is rooted.

    Returns {existential var: branch atom index}, where the branch atom is
    the unique atom closest to the free-variables node on that variable's
    side. Every free variable occurring in a branch also occurs in its
    branch atom, which is what makes per-tuple filtering there sound.
    """
    free = q.free_vars
    hplus = hypergraph_of(q).with_edge(free)
    tplus = join_tree(hplus)
    if tplus is None:
        raise EngineError("interface decomposition needs a free-connex query")
    f_id = len(q.atoms)
    tplus = tplus.reroot(f_id)
    host: dict[str, int] = {}
    for c in tplus.children()[f_id]:
        ids = tplus.subtree_ids(c)
        for i in ids:
            for v in tplus.vars_of[i]:
                if v not in set(free):
                    host.setdefault(v, c)
    return host


def eliminate_existential_inequality(
    q: ConjunctiveQuery,
    x: str,
    y: str,
    db: Database,
    strict: bool = False,
) -> Database:
    """Drop tuples so that the inequality x <= y (y existential) always
    holds: (Q AND x<=y)(D) equals Q(D') over the free variables.

    Filtering sites, in order of preference:
      * an atom containing both x and y (pure per-tuple check);
      * y's branch atom, when x occurs in it: compare x against the
        maximum y value co-joined with each tuple;
      * y's branch shares no free variable with the rest: compare x
        against the component-wide maximum, at x's first atom.
    Anything else has no sound single-relation filter and is refused.
    """
    free = set(q.free_vars)
    if y in free:
        raise EngineError(f"{y!r} is free; keep the inequality in the residual predicate")
    if x == y:
        return db

    for a in q.atoms:
        if x in a.vars and y in a.vars:
            xi, yi = a.vars.index(x), a.vars.index(y)
            rel = db.relation(a.symbol)
            keep = tuple(
                r for r in rel.rows if (r[xi] < r[yi] if strict else r[xi] <= r[yi])
            )
            return db.replace(Relation(a.symbol, rel.arity, keep))

    if q.is_boolean:
        branch = next((i for i, a in enumerate(q.atoms) if x in a.vars), None)
        if branch is None:
            raise EngineError(f"variable {x!r} not in the query")
        return _filter_by_cojoined_max(q, x, y, branch, db, strict)

    host = _interface_groups(q)
    branch = host.get(y)
    if branch is None:
        raise EngineError(f"variable {y!r} not existential in the query")
    batom = q.atoms[branch]
    if x in batom.vars:
        return _filter_by_cojoined_max(q, x, y, branch, db, strict)

    branch_vars = set()
    hplus = hypergraph_of(q).with_edge(q.free_vars)
    tplus = join_tree(hplus).reroot(len(q.atoms))
    for i in tplus.subtree_ids(branch):
        branch_vars |= set(tplus.vars_of[i])
    if not (branch_vars & free):
        m = max_cojoined_value(q, y, batom, db)
        best = NEG_INF
        for v in m.values():
            if v is not NEG_INF and (best is NEG_INF or v > best):
                best = v
        xa = next(a for a in q.atoms if x in a.vars)
        xi = xa.vars.index(x)
        rel = db.relation(xa.symbol)
        if best is NEG_INF:
            keep: tuple = ()
        else:
            keep = tuple(
                r for r in rel.rows if (r[xi] < best if strict else r[xi] <= best)
            )
        return db.replace(Relation(xa.symbol, rel.arity, keep))

    raise UnsupportedPredicateError(
        f"no sound tuple-removal site for {x} <= {y}: {x!r} does not reach "
        f"the branch atom {batom.symbol} hosting {y!r}"
    )


def _filter_by_cojoined_max(q, x, y, branch: int, db, strict: bool) -> Database:
    atom = q.atoms[branch]
    m = max_cojoined_value(q, y, atom, db)
    xi = atom.vars.index(x)
    rel = db.relation(atom.symbol)
    keep = []
    for r in rel.rows:
        best = m[r]
        if best is NEG_INF:
            continue
        if r[xi] < best if strict else r[xi] <= best:
            keep.append(r)
    return db.replace(Relation(atom.symbol, rel.arity, tuple(keep)))


# ---------------------------------------------------------------------------
# Restriction of a query plus predicate to the free variables


def _grouped_threshold_filter(
    q: ConjunctiveQuery,
    x0: str,
    group_vars: list[str],
    branch: int,
    db: Database,
    strict: bool,
) -> Database:
    """Filter the branch atom by `x0 <= min(group)` reachability.

    For each tuple of the branch atom, the threshold aggregation yields
    the best value min(group) attains among answers through it; tuples
    whose threshold cannot cover their own x0 entry die. Requires x0 in
    the branch atom. Sound for any number of group members hosted by the
    same branch, which a per-inequality pass would get wrong.
    """
    atom = q.atoms[branch]
    qf = ConjunctiveQuery(q.atoms, q.variables, q.name)
    t = tree_for_query(qf)
    node = next(n for n in t.nodes() if t.atom_of[n] == branch)
    t = t.reroot(node)
    ann = thresholds(qf, group_vars, t, db)
    xi = atom.vars.index(x0)
    rows, vals = ann.rows_of[node], ann.values_of[node]
    keep = []
    for r, theta in zip(rows, vals):
        if theta is NEG_INF:
            continue
        if theta is POS_INF or (r[xi] < theta if strict else r[xi] <= theta):
            keep.append(r)
    return db.replace(Relation(atom.symbol, atom.arity, tuple(keep)))


def restrict_predicate_to_free(
    q: ConjunctiveQuery, p: MinPredicate, db: Database
) -> tuple[ConjunctiveQuery, MinPredicate | None, Database]:
    """Rewrite (Q AND P, D) into (full query over free vars, residual
    predicate over free vars or None, database) with equal answer sets.

    Inequalities whose two sides are free survive into the residual
    predicate; the rest are folded into the database by the sound-filter
    machinery above, grouped per hosting branch so that several
    existential MIN members in one branch are handled simultaneously.
    """
    if q.is_boolean:
        raise EngineError("restrict the Boolean task via is_nonempty instead")
    if not is_free_connex(q):
        raise EngineError("restriction requires an acyclic free-connex query")
    if not q.is_self_join_free:
        raise EngineError("remove self-joins before restricting")
    p.check_vars(q)

    free = set(q.free_vars)
    x0 = p.x0
    xs = [x for x in p.xs if x != x0]
    d = db

    if x0 in free:
        exist_xs = [x for x in xs if x not in free]
        if exist_xs:
            host = _interface_groups(q)
            groups: dict[int, list[str]] = {}
            for x in exist_xs:  # declaration order within each group
                groups.setdefault(host[x], []).append(x)
            hplus = hypergraph_of(q).with_edge(q.free_vars)
            tplus = join_tree(hplus).reroot(len(q.atoms))
            for branch, group in groups.items():
                batom = q.atoms[branch]
                if x0 in batom.vars:
                    d = _grouped_threshold_filter(q, x0, group, branch, d, p.strict)
                    continue
                branch_vars = set()
                for i in tplus.subtree_ids(branch):
                    branch_vars |= set(tplus.vars_of[i])
                if branch_vars & free:
                    raise UnsupportedPredicateError(
                        f"{x0} <= min({','.join(group)}): {x0!r} does not reach "
                        f"branch atom {batom.symbol}, and the branch is not independent"
                    )
                # independent branch: min(group) has one best value overall
                qf = ConjunctiveQuery(q.atoms, q.variables, q.name)
                t = tree_for_query(qf)
                node = next(n for n in t.nodes() if t.atom_of[n] == branch)
                ann = thresholds(qf, group, t.reroot(node), d)
                best = NEG_INF
                for v in ann.values_of[node]:
                    if v is NEG_INF:
                        continue
                    if best is NEG_INF or v is POS_INF or (best is not POS_INF and v > best):
                        best = v
                xa = next(a for a in q.atoms if x0 in a.vars)
                xi = xa.vars.index(x0)
                rel = d.relation(xa.symbol)
                if best is NEG_INF:
                    keep: tuple = ()
                elif best is POS_INF:
                    keep = rel.rows
                else:
                    keep = tuple(
                        r for r in rel.rows if (r[xi] < best if p.strict else r[xi] <= best)
                    )
                d = d.replace(Relation(xa.symbol, rel.arity, keep))
        residual_xs = tuple(x for x in p.xs if x in free and x != x0)
        residual = MinPredicate(x0, residual_xs, p.strict) if residual_xs else None
    else:
        # x0 existential: every inequality is folded into the data
        coatomic = all(
            any(x0 in a.vars and x in a.vars for a in q.atoms) for x in xs
        )
        if coatomic:
            for x in xs:
                atom = next(a for a in q.atoms if x0 in a.vars and x in a.vars)
                xi0, xi = atom.vars.index(x0), atom.vars.index(x)
                rel = d.relation(atom.symbol)
                keep = tuple(
                    r for r in rel.rows if (r[xi0] < r[xi] if p.strict else r[xi0] <= r[xi])
                )
                d = d.replace(Relation(atom.symbol, rel.arity, keep))
        else:
            d = _eliminate_with_independent_x0(q, p, xs, d)
        residual = None

    q2, d2 = restrict_to_free(q, d)
    return q2, residual, d2


def _eliminate_with_independent_x0(q, p: MinPredicate, xs: list[str], db: Database) -> Database:
    """x0 existential in a branch that shares no free variable with the
    rest and hosts no MIN member: its best value is one global constant,
    and each inequality becomes a per-tuple comparison against it."""
    free = set(q.free_vars)
    host = _interface_groups(q)
    b0 = host[p.x0]
    hplus = hypergraph_of(q).with_edge(q.free_vars)
    tplus = join_tree(hplus).reroot(len(q.atoms))
    b0_vars = set()
    for i in tplus.subtree_ids(b0):
        b0_vars |= set(tplus.vars_of[i])
    if (b0_vars & free) or any(x in b0_vars for x in xs):
        raise UnsupportedPredicateError(
            f"{p}: existential {p.x0!r} is coupled to the rest of the query; "
            "no sound tuple-removal rewrite exists"
        )
    m = min_cojoined_value(q, p.x0, q.atoms[b0], db)
    best = POS_INF
    for v in m.values():
        if v is not POS_INF and (best is POS_INF or v < best):
            best = v
    d = db
    if best is POS_INF:  # x0's component is empty: no answers at all
        for a in q.atoms:
            d = d.replace(Relation(a.symbol, a.arity, ()))
        return d
    groups: dict[int, list[str]] = {}
    free_targets: list[str] = []
    for x in xs:
        if x in free:
            free_targets.append(x)
        else:
            groups.setdefault(host[x], []).append(x)
    for x in free_targets:
        xa = next(a for a in q.atoms if x in a.vars)
        xi = xa.vars.index(x)
        rel = d.relation(xa.symbol)
        keep = tuple(r for r in rel.rows if (best < r[xi] if p.strict else best <= r[xi]))
        d = d.replace(Relation(xa.symbol, rel.arity, keep))
    for branch, group in groups.items():
        qf = ConjunctiveQuery(q.atoms, q.variables, q.name)
        t = tree_for_query(qf)
        node = next(n for n in t.nodes() if t.atom_of[n] == branch)
        ann = thresholds(qf, group, t.reroot(node), d)
        atom = q.atoms[branch]
        keep2 = []
        for r, theta in zip(ann.rows_of[node], ann.values_of[node]):
            if theta is NEG_INF:
                continue
            if theta is POS_INF or (best < theta if p.strict else best <= theta):
                keep2.append(r)
        d = d.replace(Relation(atom.symbol, atom.arity, tuple(keep2)))
    return d
