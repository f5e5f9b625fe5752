"""Scaling families and step-count instrumentation.

Two shipped families:
  * star: three relations sharing one join variable, ranked by the
    minimum of three per-relation score variables;
  * path: a four-atom chain with a min-predicate from one end to the two
    variables at the other end (enumeration-only territory).

Row values are drawn from a sqrt-sized domain so join degeneracy grows
with the instance, and sizes are exact (no dedup drift).
"""

from __future__ import annotations

import math
import random
import time

from .access import build_min_da, count_via_access
from .enumeration import enumerate_ranked_min, enumerate_with_predicate
from .instrument import StepCounter
from .model import Database, Relation
from .parser import parse_query

STAR_TEXT = "Q(r1,r2,r3,s) :- W1(r1,s), W2(r2,s), W3(r3,s).\nORDER BY MIN(r1,r2,r3).\n"
PATH_TEXT = (
    "Q(x0,u,v,x1,x2) :- R0(x0,u), R1(u,v), R2(v,x1), R3(x1,x2).\n"
    "PREDICATE x0 <= MIN(x1,x2).\n"
)


def _grid_rows(rng: random.Random, m: int, dom: int) -> list[tuple[int, int]]:
    """m distinct pairs over [0,dom)^2 (dom*dom >= m required)."""
    picks = rng.sample(range(dom * dom), m)
    return [(a // dom, a % dom) for a in picks]


def star_instance(total_size: int, seed: int = 0):
    """Star family instance with |D| == total_size (3 relations)."""
    q, _, r = parse_query(STAR_TEXT)
    m = total_size // 3
    dom = max(2, math.isqrt(m) + 1)
    rng = random.Random(seed)
    rels = {}
    for sym in ("W1", "W2", "W3"):
        rels[sym] = Relation.from_ints(sym, 2, _grid_rows(rng, m, dom))
    return q, r, Database(rels)


def path_instance(total_size: int, seed: int = 0):
    """Path family instance with |D| == total_size (4 relations)."""
    q, p, _ = parse_query(PATH_TEXT)
    m = total_size // 4
    dom = max(2, math.isqrt(m) + 1)
    rng = random.Random(seed)
    rels = {}
    for sym in ("R0", "R1", "R2", "R3"):
        rels[sym] = Relation.from_ints(sym, 2, _grid_rows(rng, m, dom))
    return q, p, Database(rels)


def bench_min_da(sizes, seed: int = 0, access_samples: int = 200) -> list[dict]:
    """Build the star-family index per size; record build steps, part data
    blowup, and per-access probe counts."""
    rows = []
    for n in sizes:
        q, r, db = star_instance(n, seed)
        t0 = time.perf_counter()
        counter = StepCounter()
        ix = build_min_da(q, r.xs, db, counter=counter)
        build_s = time.perf_counter() - t0
        parts_size = sum(info[1].size for info in ix.part_info)
        rng = random.Random(seed + n)
        max_probes = 0
        total_probes = 0
        samples = min(access_samples, max(ix.total, 1))
        for _ in range(samples):
            k = rng.randrange(ix.total) if ix.total else 0
            probes = StepCounter()
            if ix.total:
                ix.access(k, probes)
            max_probes = max(max_probes, probes.steps)
            total_probes += probes.steps
        cv_probes = StepCounter()
        count = count_via_access(ix, cv_probes)
        size = db.size
        rows.append(
            {
                "family": "star",
                "size": size,
                "build_steps": counter.steps,
                "normalized": counter.steps / (size * max(1.0, math.log2(size)) ** 2),
                "parts_size": parts_size,
                "total": ix.total,
                "count_check": count == ix.total,
                "count_probes": cv_probes.steps,
                "max_probes": max_probes,
                "avg_probes": total_probes / samples,
                "build_seconds": build_s,
            }
        )
    return rows


def bench_enum_pred(sizes, seed: int = 0, emissions: int = 20000) -> list[dict]:
    """Path-family predicate enumeration: max/avg inter-emission steps."""
    rows = []
    for n in sizes:
        q, p, db = path_instance(n, seed)
        t0 = time.perf_counter()
        s = enumerate_with_predicate(q, p, db)
        k = 0
        while s.has_next() and k < emissions:
            s.advance()
            k += 1
        rows.append(
            {
                "family": "path",
                "size": db.size,
                "emitted": k,
                "max_delay": s.max_delay,
                "avg_delay": (s.steps / k) if k else 0.0,
                "build_steps": s.build_steps,
                "seconds": time.perf_counter() - t0,
            }
        )
    return rows


def bench_ranked(sizes, seed: int = 0, emissions: int = 5000) -> list[dict]:
    """Star-family ranked enumeration: steps to the k-th emission against
    the |D| + k*|X| envelope."""
    rows = []
    for n in sizes:
        q, r, db = star_instance(n, seed)
        t0 = time.perf_counter()
        s = enumerate_ranked_min(q, r.xs, db)
        k = 0
        while s.has_next() and k < emissions:
            s.advance()
            k += 1
        total_steps = s.build_steps + s.steps
        rows.append(
            {
                "family": "star",
                "size": db.size,
                "emitted": k,
                "steps": total_steps,
                "envelope_ratio": total_steps / (db.size + max(k, 1) * len(r.xs)),
                "skips": s.skips,
                "seconds": time.perf_counter() - t0,
            }
        )
    return rows


def default_sizes(lo_exp: int = 10, hi_exp: int = 16):
    return [2**e for e in range(lo_exp, hi_exp + 1)]
