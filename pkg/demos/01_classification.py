"""Which query-answering tasks stay near-linear for a given query?

The classifier inspects only the query: hypergraph acyclicity,
free-connexity, and chordless paths between the variables that the
MIN condition touches. Data never enters the verdict.
"""

from minjoin import classify_all, parse_query

EXAMPLES = {
    "three teams sharing a shift": (
        "Q(r1,r2,r3,s) :- W1(r1,s), W2(r2,s), W3(r3,s).\n"
        "ORDER BY MIN(r1,r2,r3).\n"
    ),
    "star with a min-predicate": (
        "Q(x0,x1,x2,y) :- R0(x0), R1(x1,y), R2(x2,y).\n"
        "PREDICATE x0 <= MIN(x1,x2).\n"
    ),
    "long chordless path to the MIN variables": (
        "Q(x0,u,v,x1,x2) :- R0(x0,u), R1(u,v), R2(v,x1), R3(x1,x2).\n"
        "PREDICATE x0 <= MIN(x1,x2).\n"
    ),
    "cyclic triangle": (
        "Q(a,b,c) :- R(a,b), S(b,c), T(a,c).\nPREDICATE a <= MIN(b,c).\n"
    ),
    "acyclic but not free-connex": (
        "Q(x,z) :- R(x,y), S(y,z).\nPREDICATE x <= MIN(z).\n"
    ),
}

for name, text in EXAMPLES.items():
    q, p, r = parse_query(text)
    print(f"== {name}")
    print(f"   {q}")
    for v in classify_all(q, p, r):
        mark = "ok " if v.tractable else "NO "
        extra = "" if v.tractable else f"   <- {v.witness}"
        print(f"   {mark} {v.task.value}{extra}")
    print()

print(
    "Note the third example: elimination, counting, and direct access are\n"
    "blocked by the chordless path x0-u-v-x1, yet both enumeration tasks\n"
    "remain tractable. That gap is real; 04_enumeration.py exercises it."
)
