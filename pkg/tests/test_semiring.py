import itertools
import operator

import pytest

from minjoin import (
    COUNTING,
    MAX_MIN,
    MAX_TROPICAL,
    NEG_INF,
    POS_INF,
    Semiring,
    SemiringLawError,
    StepCounter,
    TaggedValue,
    aggregate_bottom_up,
    check_semiring_laws,
    count_answers,
    max_cojoined_value,
    oracle_answers,
    parse_query,
    thresholds,
    tree_for_query,
)
from minjoin.model import Database, Relation

from conftest import rand_acyclic_query, rand_database

STAR = "Q(x0,x1,x2,y) :- R0(x0), R1(x1,y), R2(x2,y)."


def star_db():
    return Database(
        {
            "R0": Relation.from_ints("R0", 1, [[1], [2]]),
            "R1": Relation.from_ints("R1", 2, [[1, 0], [2, 0]]),
            "R2": Relation.from_ints("R2", 2, [[2, 0], [3, 0]]),
        }
    )


def test_semiring_laws_hold_for_instances():
    check_semiring_laws(COUNTING, [0, 1, 2, 5, 9])
    vals = [TaggedValue(i, 0) for i in (-3, 0, 2, 7)]
    check_semiring_laws(MAX_MIN, vals)
    check_semiring_laws(MAX_TROPICAL, vals)


def test_semiring_law_checker_catches_breakage():
    broken = Semiring("broken", operator.add, operator.sub, 0, 0)
    with pytest.raises(SemiringLawError):
        check_semiring_laws(broken, [1, 2, 3])


def test_counting_aggregation_star():
    q, _, _ = parse_query(STAR)
    db = star_db()
    t = tree_for_query(q)
    ann = aggregate_bottom_up(q, db, t, lambda n, r: 1, COUNTING)
    root_vals = ann.values_of[t.root]
    # every root tuple co-joins with 2*2 combinations
    assert sorted(root_vals) == [4, 4] or sum(root_vals) == 8
    assert count_answers(q, db) == 8
    assert count_answers(q, db) == len(oracle_answers(q, db))


def test_counting_empty_relation_gives_zero():
    q, _, _ = parse_query(STAR)
    db = star_db().replace(Relation("R1", 2, ()))
    assert count_answers(q, db) == 0


def test_counting_single_atom():
    q, _, _ = parse_query("Q(x) :- R(x).")
    db = Database({"R": Relation.from_ints("R", 1, [[i] for i in range(5)])})
    assert count_answers(q, db) == 5


def _brute_subtree_agg(q, db, t, val, s, node, row):
    """Definitional double fold over the partial answers below `row`."""
    sub = t.subtree_ids(node)
    schemas = {n: (q.atoms[t.atom_of[n]].vars if t.atom_of[n] is not None else tuple(sorted(t.vars_of[n]))) for n in sub}
    rel_rows = {}
    for n in sub:
        if t.atom_of[n] is not None:
            rel_rows[n] = db.relation(q.atoms[t.atom_of[n]].symbol).rows
    order = [n for n in sub if n in rel_rows]
    total = s.zero
    for combo in itertools.product(*(rel_rows[n] for n in order)):
        assignment = {}
        ok = True
        for n, r in zip(order, combo):
            for v, c in zip(schemas[n], r):
                if assignment.setdefault(v, c) != c:
                    ok = False
                    break
            if not ok:
                break
        if not ok or dict(zip(schemas[node], row)) != {
            v: assignment[v] for v in schemas[node]
        }:
            continue
        prod = s.one
        for n, r in zip(order, combo):
            prod = s.times(prod, val(n, r))
        total = s.plus(total, prod)
    return total


@pytest.mark.parametrize("which", ["counting", "maxmin"])
def test_aggregate_matches_definitional_fold(rng, which):
    for _ in range(25):
        q = rand_acyclic_query(rng, max_atoms=3, max_arity=2, full=True)
        if not q.is_self_join_free:
            continue
        db = rand_database(rng, q, dom=5, max_rows=4)
        t = tree_for_query(q)
        if which == "counting":
            s, val = COUNTING, lambda n, r: 1
        else:
            s = MAX_MIN
            xr = set(rng.sample(list(q.variables), min(2, len(q.variables))))

            def val(n, r, xr=xr):
                sch = q.atoms[t.atom_of[n]].vars
                vals = [c for v, c in zip(sch, r) if v in xr]
                return min(vals) if vals else POS_INF

        ann = aggregate_bottom_up(q, db, t, val, s)
        for n in t.nodes():
            for row, got in zip(ann.rows_of[n], ann.values_of[n]):
                want = _brute_subtree_agg(q, db, t, val, s, n, row)
                assert got == want, (q, n, row)


def test_max_cojoined_value_star():
    q, _, _ = parse_query(STAR)
    db = star_db()
    m = max_cojoined_value(q, "x1", "R0", db)
    for row in db.relation("R0").rows:
        assert m[row] == TaggedValue(2, 0)


def test_max_cojoined_dangling_is_neg_inf():
    q, _, _ = parse_query("Q(x,y) :- R(x), S(y).")
    db = Database(
        {"R": Relation.from_ints("R", 1, [[5]]), "S": Relation("S", 1, ())}
    )
    m = max_cojoined_value(q, "y", "R", db)
    assert m[(TaggedValue(5),)] is NEG_INF


def test_max_cojoined_self_containment():
    q, _, _ = parse_query("Q(x,y) :- R(x,y).")
    db = Database({"R": Relation.from_ints("R", 2, [[1, 9], [2, 3]])})
    m = max_cojoined_value(q, "y", "R", db)
    for row in db.relation("R").rows:
        assert m[row] >= row[1]


def test_thresholds_examples():
    q, _, _ = parse_query(STAR)
    db = star_db()
    t = tree_for_query(q)
    ann = thresholds(q, {"x1", "x2"}, t, db)
    # leaf tuple carrying x1=1: threshold is its own value
    for n in t.nodes():
        sch = q.atoms[t.atom_of[n]].vars
        if "x1" in sch and len(t.children()[n]) == 0:
            col = sch.index("x1")
            for row, theta in zip(ann.rows_of[n], ann.values_of[n]):
                assert theta == row[col]
    # empty ranking set: every threshold that joins is +inf
    ann2 = thresholds(q, set(), t, db)
    for n in t.nodes():
        for theta in ann2.values_of[n]:
            assert theta is POS_INF or theta is NEG_INF


def test_aggregate_step_counter_linear():
    q, _, _ = parse_query(STAR)
    sizes = []
    for scale in (50, 100, 200, 400):
        db = Database(
            {
                "R0": Relation.from_ints("R0", 1, [[i] for i in range(scale)]),
                "R1": Relation.from_ints("R1", 2, [[i, i % 20] for i in range(scale)]),
                "R2": Relation.from_ints("R2", 2, [[i, i % 20] for i in range(scale)]),
            }
        )
        c = StepCounter()
        count_answers(q, db, counter=c)
        sizes.append((db.size, c.steps))
    for (n1, s1), (n2, s2) in zip(sizes, sizes[1:]):
        assert n2 == 2 * n1 and s2 / s1 <= 2.3
