import random

from minjoin import (
    MinPredicate,
    Task,
    classify,
    enumerate_full_acyclic,
    enumerate_ranked_min,
    enumerate_with_predicate,
    oracle_answers,
    parse_query,
    regularized,
)
from minjoin.model import Database, Relation

from conftest import rand_acyclic_query, rand_database

PATH = "Q(x0,u,v,x1,x2) :- R0(x0,u), R1(u,v), R2(v,x1), R3(x1,x2).\nPREDICATE x0 <= MIN(x1,x2).\n"


def _star():
    q, _, _ = parse_query("Q(x0,x1,x2,y) :- R0(x0), R1(x1,y), R2(x2,y).")
    db = Database(
        {
            "R0": Relation.from_ints("R0", 1, [[1], [2]]),
            "R1": Relation.from_ints("R1", 2, [[1, 0], [2, 0]]),
            "R2": Relation.from_ints("R2", 2, [[2, 0], [3, 0]]),
        }
    )
    return q, db


def _path_db(rng, n=10, dom=6):
    def rel(sym):
        rows = [[rng.randrange(dom), rng.randrange(dom)] for _ in range(n)]
        return Relation.from_ints(sym, 2, rows)

    return Database({s: rel(s) for s in ("R0", "R1", "R2", "R3")})


def test_enumerate_single_relation():
    q, _, _ = parse_query("Q(x) :- R(x).")
    db = Database({"R": Relation.from_ints("R", 1, [[2], [1]])})
    s = enumerate_full_acyclic(q, db)
    assert {a["x"].base for a in s.drain()} == {1, 2}


def test_enumerate_star_eight_distinct():
    q, db = _star()
    s = enumerate_full_acyclic(q, db)
    got = s.drain()
    assert len(got) == 8 and len(set(got)) == 8
    assert set(got) == oracle_answers(q, db)


def test_enumerate_empty_join_immediately_done():
    q, db = _star()
    s = enumerate_full_acyclic(q, db.replace(Relation("R1", 2, ())))
    assert not s.has_next()


def test_enumerate_full_random(rng):
    done = 0
    while done < 40:
        q = rand_acyclic_query(rng, max_atoms=4, full=True)
        if not q.is_self_join_free:
            continue
        db = rand_database(rng, q, dom=5, max_rows=7)
        got = enumerate_full_acyclic(q, db).drain()
        assert len(got) == len(set(got))
        assert set(got) == oracle_answers(q, db)
        done += 1


# -- with predicate -----------------------------------------------------------


def test_enumerate_with_predicate_path_query(rng):
    q, p, _ = parse_query(PATH)
    assert not classify(Task.ELIMINATION, q, p).tractable
    for _ in range(50):
        db = _path_db(rng)
        got = enumerate_with_predicate(q, p, db).drain()
        want = oracle_answers(q, db, predicate=p)
        assert set(got) == want and len(got) == len(want)


def test_enumerate_with_predicate_full_pruning():
    q, db = _star()
    # raise x0 above every threshold
    db = db.replace(Relation.from_ints("R0", 1, [[99]]))
    p = MinPredicate("x0", ("x1", "x2"))
    assert enumerate_with_predicate(q, p, db).drain() == []


def test_enumerate_with_predicate_root_filter_variant():
    q, _, _ = parse_query("Q(x0,x1) :- R(x0,x1).")
    db = Database({"R": Relation.from_ints("R", 2, [[1, 5], [7, 5], [5, 5]])})
    p = MinPredicate("x0", ("x1",))
    got = {(a["x0"].base, a["x1"].base) for a in enumerate_with_predicate(q, p, db).drain()}
    assert got == {(1, 5), (5, 5)}
    strict = MinPredicate("x0", ("x1",), strict=True)
    got2 = {(a["x0"].base, a["x1"].base) for a in enumerate_with_predicate(q, strict, db).drain()}
    assert got2 == {(1, 5)}


def test_enumerate_with_predicate_random(rng):
    done = 0
    while done < 50:
        q = rand_acyclic_query(rng, max_atoms=4, full=True)
        if not q.is_self_join_free:
            continue
        vars_ = list(q.variables)
        x0 = rng.choice(vars_)
        xs = tuple(rng.sample(vars_, min(3, len(vars_))))
        p = MinPredicate(x0, xs)
        db = rand_database(rng, q, dom=6, max_rows=7)
        got = enumerate_with_predicate(q, p, db).drain()
        want = oracle_answers(q, db, predicate=p)
        assert set(got) == want and len(got) == len(want), (q.to_text(), str(p))
        done += 1


# -- ranked -------------------------------------------------------------------


def test_ranked_single_variable_plain_sorted():
    q, db = _star()
    s = enumerate_ranked_min(q, ("x1",), db)
    got = s.drain()
    vals = [a["x1"] for a in got]
    assert vals == sorted(vals) and s.skips == 0


def test_ranked_star_sorted_no_dups():
    q, db = _star()
    xs = ("x1", "x2")
    s = enumerate_ranked_min(q, xs, db)
    got = s.drain()
    assert set(got) == oracle_answers(q, db) and len(got) == len(set(got))
    keys = [min(a[x] for x in xs) for a in got]
    assert keys == sorted(keys)
    assert s.skips <= (len(xs) - 1) * len(got)


def test_ranked_random(rng):
    done = 0
    while done < 40:
        q = rand_acyclic_query(rng, max_atoms=4, full=True)
        if not q.is_self_join_free:
            continue
        vars_ = list(q.variables)
        xs = tuple(rng.sample(vars_, min(rng.randint(1, 3), len(vars_))))
        db = rand_database(rng, q, dom=5, max_rows=7)
        s = enumerate_ranked_min(q, xs, db)
        got = s.drain()
        want = oracle_answers(q, db)
        assert set(got) == want and len(got) == len(want)
        keys = [min(a[x] for x in xs) for a in got]
        assert keys == sorted(keys)
        assert s.skips <= (len(xs) - 1) * len(got)
        done += 1


def test_regularized_wrapper_preserves_drain():
    q, db = _star()
    plain = enumerate_ranked_min(q, ("x0", "x1"), db).drain()
    wrapped = regularized(enumerate_ranked_min(q, ("x0", "x1"), db), quantum=4).drain()
    assert wrapped == plain


# -- delay properties ---------------------------------------------------------


def _scaled_path_db(n, seed):
    rnd = random.Random(seed)
    def rel(sym):
        rows = [[rnd.randrange(max(4, n // 2)), rnd.randrange(max(4, n // 2))] for _ in range(n)]
        return Relation.from_ints(sym, 2, rows)
    return Database({s: rel(s) for s in ("R0", "R1", "R2", "R3")})


def test_delay_constant_across_doubling():
    q, p, _ = parse_query(PATH)
    delays = []
    plain_delays = []
    for n in (64, 128, 256, 512, 1024):
        db = _scaled_path_db(n, seed=n)
        s = enumerate_with_predicate(q, p, db)
        count = 0
        while s.has_next() and count < 2000:
            s.advance()
            count += 1
        delays.append(max(s.max_delay, 1))
        s2 = enumerate_full_acyclic(q, db)
        count = 0
        while s2.has_next() and count < 2000:
            s2.advance()
            count += 1
        plain_delays.append(max(s2.max_delay, 1))
    for seq in (delays, plain_delays):
        for d1, d2 in zip(seq, seq[1:]):
            assert d2 <= 1.5 * max(seq[0], d1) + 2


def test_ranked_linear_partial_time():
    q, _, _ = parse_query("Q(x0,x1,x2,y) :- R0(x0,y), R1(x1,y), R2(x2,y).")
    xs = ("x0", "x1", "x2")
    ratios = []
    for n in (64, 128, 256, 512):
        rnd = random.Random(n)
        db = Database(
            {
                s: Relation.from_ints(
                    s, 2, [[rnd.randrange(n), rnd.randrange(8)] for _ in range(n)]
                )
                for s in ("R0", "R1", "R2")
            }
        )
        s = enumerate_ranked_min(q, xs, db)
        k = 0
        while s.has_next() and k < 500:
            s.advance()
            k += 1
        total = s.build_steps + s.steps
        ratios.append(total / (db.size + max(k, 1) * len(xs)))
    assert max(ratios) <= 4 * min(ratios) + 4
