"""Hypergraph and join-tree machinery, plus the task classifier.

Join trees are rooted, node-identity-stable structures: rearrangement
algorithms move edges around but keep the same node ids, so "same node
multiset" and "union of trees" are well defined across rearrangements.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .errors import EngineError, InternalInvariantError
from .model import ConjunctiveQuery, MinPredicate, MinRanking


@dataclass(frozen=True)
class Hypergraph:
    vertices: frozenset[str]
    edges: tuple[frozenset[str], ...]

    def __post_init__(self):
        for e in self.edges:
            if not e <= self.vertices:
                raise EngineError("edge not contained in the vertex set")

    def with_edge(self, edge: Iterable[str]) -> "Hypergraph":
        e = frozenset(edge)
        return Hypergraph(self.vertices | e, self.edges + (e,))

    def adjacency(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {v: set() for v in self.vertices}
        for e in self.edges:
            for u in e:
                adj[u].update(e - {u})
        return adj


def hypergraph_of(q: ConjunctiveQuery) -> Hypergraph:
    return Hypergraph(frozenset(q.variables), tuple(frozenset(a.vars) for a in q.atoms))


class RootedJoinTree:
    """Rooted tree over variable-set nodes, each optionally linked to an atom.

    `atom_of[i]` is the index of the source atom, or None for a relaxed
    node (a restriction of an existing node); `relaxed_host[i]` then names
    the node whose relation the relaxed node projects.
    """

    __slots__ = ("vars_of", "atom_of", "parent", "root", "relaxed_host")

    def __init__(self, vars_of, atom_of, parent, root, relaxed_host=None):
        self.vars_of: dict[int, frozenset[str]] = dict(vars_of)
        self.atom_of: dict[int, int | None] = dict(atom_of)
        self.parent: dict[int, int | None] = dict(parent)
        self.root: int = root
        self.relaxed_host: dict[int, int] = dict(relaxed_host or {})
        if self.parent.get(root, None) is not None:
            raise EngineError("root must have no parent")

    # -- basic shape ---------------------------------------------------

    def nodes(self) -> list[int]:
        return sorted(self.vars_of)

    def children(self) -> dict[int, list[int]]:
        ch: dict[int, list[int]] = {i: [] for i in self.vars_of}
        for i, p in self.parent.items():
            if p is not None:
                ch[p].append(i)
        for lst in ch.values():
            lst.sort()
        return ch

    def bfs_order(self) -> list[int]:
        ch = self.children()
        order, queue = [], [self.root]
        while queue:
            n = queue.pop(0)
            order.append(n)
            queue.extend(ch[n])
        if len(order) != len(self.vars_of):
            raise InternalInvariantError("tree is disconnected")
        return order

    def depths(self) -> dict[int, int]:
        d = {self.root: 0}
        for n in self.bfs_order()[1:]:
            d[n] = d[self.parent[n]] + 1
        return d

    def edges(self) -> set[frozenset[int]]:
        return {frozenset((i, p)) for i, p in self.parent.items() if p is not None}

    def subtree_ids(self, r: int) -> list[int]:
        ch = self.children()
        out, queue = [], [r]
        while queue:
            n = queue.pop(0)
            out.append(n)
            queue.extend(ch[n])
        return out

    def copy(self) -> "RootedJoinTree":
        return RootedJoinTree(self.vars_of, self.atom_of, self.parent, self.root, self.relaxed_host)

    def subtree(self, r: int) -> "RootedJoinTree":
        ids = set(self.subtree_ids(r))
        return RootedJoinTree(
            {i: self.vars_of[i] for i in ids},
            {i: self.atom_of[i] for i in ids},
            {i: (self.parent[i] if i != r and self.parent[i] in ids else None) for i in ids},
            r,
            {i: h for i, h in self.relaxed_host.items() if i in ids},
        )

    def reroot(self, new_root: int) -> "RootedJoinTree":
        """Same edges, different root."""
        adj: dict[int, list[int]] = {i: [] for i in self.vars_of}
        for e in self.edges():
            a, b = sorted(e)
            adj[a].append(b)
            adj[b].append(a)
        parent: dict[int, int | None] = {new_root: None}
        queue = [new_root]
        while queue:
            n = queue.pop(0)
            for m in sorted(adj[n]):
                if m not in parent:
                    parent[m] = n
                    queue.append(m)
        return RootedJoinTree(self.vars_of, self.atom_of, parent, new_root, self.relaxed_host)

    @classmethod
    def from_edges(cls, template: "RootedJoinTree", edges: set[frozenset[int]], root: int):
        """Rebuild a tree over the template's nodes from an undirected edge set."""
        adj: dict[int, list[int]] = {i: [] for i in template.vars_of}
        for e in edges:
            a, b = sorted(e)
            adj[a].append(b)
            adj[b].append(a)
        parent: dict[int, int | None] = {root: None}
        queue = [root]
        while queue:
            n = queue.pop(0)
            for m in sorted(adj[n]):
                if m not in parent:
                    parent[m] = n
                    queue.append(m)
        if len(parent) != len(template.vars_of):
            raise InternalInvariantError("edge union does not connect all nodes")
        return cls(template.vars_of, template.atom_of, parent, root, template.relaxed_host)

    # -- variable placement --------------------------------------------

    def nodes_with_var(self, v: str) -> list[int]:
        return [i for i in self.nodes() if v in self.vars_of[i]]

    def highest(self, v: str) -> int:
        """The node containing v closest to the root (unique by connectivity)."""
        depths = self.depths()
        cands = self.nodes_with_var(v)
        if not cands:
            raise EngineError(f"variable {v!r} not in the tree")
        return min(cands, key=lambda i: (depths[i], i))

    def neighbors_of_var(self, v: str) -> frozenset[str]:
        out: set[str] = set()
        for i in self.nodes_with_var(v):
            out |= self.vars_of[i]
        out.discard(v)
        return frozenset(out)

    # -- validity ------------------------------------------------------

    def satisfies_running_intersection(self) -> bool:
        """Each variable's nodes must form a connected subtree."""
        for v in {u for vs in self.vars_of.values() for u in vs}:
            holders = set(self.nodes_with_var(v))
            # walk up from each holder; the meeting structure is connected iff
            # every holder reaches another holder through holder-only paths,
            # checked via the classic "climb to the shallowest holder" test.
            top = min(holders, key=lambda i: self._depth_of(i))
            for n in holders:
                m = n
                while m != top:
                    m = self.parent[m]
                    if m is None:
                        return False
                    if m not in holders:
                        return False
        return True

    def _depth_of(self, n: int) -> int:
        d = 0
        while self.parent[n] is not None:
            n = self.parent[n]
            d += 1
        return d

    def can_reattach(self, n: int, target: int) -> bool:
        """True iff moving n under `target` keeps the join-tree property.

        Valid exactly when the separator vars(n) & vars(parent(n)) is
        contained in the target node, for targets on the root path.
        """
        p = self.parent[n]
        if p is None or target == p:
            return False
        sep = self.vars_of[n] & self.vars_of[p]
        return sep <= self.vars_of[target]

    def is_maximally_branching(self) -> bool:
        depths = self.depths()
        for n in self.nodes():
            p = self.parent[n]
            if p is None or self.parent[p] is None:
                continue
            a = self.parent[p]
            while a is not None:
                if self.can_reattach(n, a):
                    return False
                a = self.parent[a]
        return True

    def pretty(self) -> str:
        ch = self.children()
        lines: list[str] = []

        def walk(n: int, depth: int):
            tag = f"@atom{self.atom_of[n]}" if self.atom_of[n] is not None else "(relaxed)"
            lines.append("  " * depth + "{" + ",".join(sorted(self.vars_of[n])) + "} " + tag)
            for c in ch[n]:
                walk(c, depth + 1)

        walk(self.root, 0)
        return "\n".join(lines)

    def __repr__(self):
        return f"RootedJoinTree(root={self.root}, nodes={len(self.vars_of)})"


# ---------------------------------------------------------------------------
# GYO construction


def _gyo(h: Hypergraph):
    """Ear-removal reduction. Returns (tree | None, irreducible core edges).

    An edge is an ear when its vertices shared with other remaining edges
    all fit inside a single witness edge; the ear attaches below the
    witness (preferring a superset witness so contained edges nest).
    Deterministic: lowest-index ear with lowest-index witness each round.
    """
    remaining: dict[int, frozenset[str]] = {i: e for i, e in enumerate(h.edges)}
    parent: dict[int, int | None] = {}
    while len(remaining) > 1:
        ear = witness = None
        ids = sorted(remaining)
        for i in ids:
            e = remaining[i]
            shared = e & frozenset().union(*(remaining[j] for j in ids if j != i))
            supersets = [j for j in ids if j != i and e <= remaining[j]]
            covers = [j for j in ids if j != i and shared <= remaining[j]]
            if supersets:
                ear, witness = i, min(supersets)
                break
            if covers:
                ear, witness = i, min(covers)
                break
        if ear is None:
            return None, tuple(remaining[i] for i in sorted(remaining))
        parent[ear] = witness
        del remaining[ear]
    if not remaining:
        return None, ()
    root = next(iter(remaining))
    parent[root] = None
    vars_of = {i: e for i, e in enumerate(h.edges)}
    atom_of = {i: i for i in vars_of}
    return RootedJoinTree(vars_of, atom_of, parent, root), ()


def join_tree(h: Hypergraph) -> RootedJoinTree | None:
    """A join tree of `h` (running intersection holds), or None if cyclic.

    Disconnected hypergraphs still yield a single tree: an edge sharing no
    variables with the rest is an ear with an empty separator, so the
    components end up glued; cross-component semijoins then key on the
    empty tuple, which is exactly cross-product semantics.
    """
    tree, _ = _gyo(h)
    return tree


def tree_for_query(q: ConjunctiveQuery) -> RootedJoinTree:
    t = join_tree(hypergraph_of(q))
    if t is None:
        raise EngineError("query is cyclic; no join tree exists")
    return t


def is_free_connex(q: ConjunctiveQuery) -> bool:
    h = hypergraph_of(q)
    if join_tree(h) is None:
        return False
    return join_tree(h.with_edge(q.free_vars)) is not None


# ---------------------------------------------------------------------------
# Chordless paths


def find_bad_path(
    h: Hypergraph, a_set: Iterable[str], b_set: Iterable[str]
) -> tuple[str, ...] | None:
    """Some chordless path of length >= 3 with one endpoint in each set.

    Returns the lexicographically least such path (over both orientations),
    or None. Exhaustive search: query sizes are constants, so this never
    touches data complexity.
    """
    A, B = frozenset(a_set), frozenset(b_set)
    if not A or not B:
        return None
    adj = h.adjacency()
    best: tuple[str, ...] | None = None

    def extend(path: tuple[str, ...], members: frozenset[str]):
        nonlocal best
        last = path[-1]
        for v in sorted(adj[last]):
            if v in members:
                continue
            if any(v in adj[u] for u in path[:-1]):
                continue  # chord
            np = path + (v,)
            if len(np) >= 4 and ((np[0] in A and v in B) or (np[0] in B and v in A)):
                cand = min(np, np[::-1])
                if best is None or cand < best:
                    best = cand
            extend(np, members | {v})

    for s in sorted(A | B):
        if s in h.vertices:
            extend((s,), frozenset((s,)))
    return best


# ---------------------------------------------------------------------------
# Maximally-branching rearrangement


def make_maximally_branching(t: RootedJoinTree) -> RootedJoinTree:
    """Reattach every node to its highest legal ancestor, root to leaf.

    Output has the same nodes and root, keeps running intersection, and no
    node can be moved to any strict ancestor of its parent afterwards.
    """
    out = t.copy()
    for n in t.bfs_order():
        p = out.parent[n]
        if p is None or out.parent[p] is None:
            continue
        # ancestors of parent(n), root first
        chain = []
        a = out.parent[p]
        while a is not None:
            chain.append(a)
            a = out.parent[a]
        for target in reversed(chain):
            if out.can_reattach(n, target):
                out.parent[n] = target
                break
    if not out.satisfies_running_intersection():
        raise InternalInvariantError("rearrangement broke running intersection")
    return out


# ---------------------------------------------------------------------------
# The dichotomy classifier


class Task(Enum):
    ELIMINATION = "elimination"
    COUNTING = "counting"
    BOOLEAN = "boolean"
    RANKED_DA = "ranked_da"
    UNRANKED_DA_PRED = "unranked_da_pred"
    RANKED_ENUM = "ranked_enum"
    ENUM_PRED = "enum_pred"
    SINGLE_ACCESS = "single_access"


PREDICATE_TASKS = {Task.ELIMINATION, Task.COUNTING, Task.UNRANKED_DA_PRED, Task.ENUM_PRED, Task.BOOLEAN}
RANKING_TASKS = {Task.RANKED_DA, Task.RANKED_ENUM, Task.SINGLE_ACCESS}


@dataclass(frozen=True)
class Witness:
    kind: str  # "cyclic" | "not_free_connex" | "bad_path"
    path: tuple[str, ...] | None = None
    core: tuple[frozenset, ...] | None = None

    def to_json(self):
        out: dict = {"kind": self.kind}
        if self.path is not None:
            out["path"] = list(self.path)
        if self.core is not None:
            out["core"] = [sorted(e) for e in self.core]
        return out

    def __str__(self):
        if self.kind == "bad_path":
            return "chordless path " + "-".join(self.path)
        if self.kind == "cyclic":
            return "cyclic core " + ", ".join("{" + ",".join(sorted(e)) + "}" for e in self.core)
        return "not free-connex"


@dataclass(frozen=True)
class Verdict:
    task: Task
    tractable: bool
    witness: Witness | None = None

    def __post_init__(self):
        if self.tractable == (self.witness is not None):
            raise EngineError("witness present iff intractable")

    def to_json(self):
        return {
            "task": self.task.value,
            "tractable": self.tractable,
            "witness": self.witness.to_json() if self.witness else None,
        }

    def __str__(self):
        if self.tractable:
            return f"{self.task.value}: tractable"
        return f"{self.task.value}: intractable ({self.witness})"


def _normalize_ranking(spec) -> tuple[str, ...]:
    if isinstance(spec, MinRanking):
        return spec.xs
    if isinstance(spec, MinPredicate):
        raise EngineError("ranking task classified with a predicate spec")
    return tuple(spec)


def classify(task: Task, q: ConjunctiveQuery, spec) -> Verdict:
    """Structural verdict for one task; purely query-level, data-free.

    Tractability conditions:
      boolean                      acyclic
      ranked_enum / enum_pred /
      single_access                acyclic free-connex
      elimination / counting /
      unranked_da_pred             acyclic free-connex, and not (x0 free with a
                                   chordless >=3-path from x0 to a free MIN var)
      ranked_da                    acyclic free-connex, and no chordless
                                   >=3-path between two ranking variables
    """
    h = hypergraph_of(q)
    tree, core = _gyo(h)
    if tree is None:
        return Verdict(task, False, Witness("cyclic", core=core))
    if task is Task.BOOLEAN:
        return Verdict(task, True)

    tree2, core2 = _gyo(h.with_edge(q.free_vars))
    if tree2 is None:
        return Verdict(task, False, Witness("not_free_connex", core=core2))

    free = set(q.free_vars)
    if task in (Task.RANKED_ENUM, Task.SINGLE_ACCESS, Task.RANKED_DA):
        xs = _normalize_ranking(spec)
        if not set(xs) <= free:
            raise EngineError(f"{task.value}: ranking variables must be free")
        if task is Task.RANKED_DA:
            path = find_bad_path(h, xs, xs)
            if path is not None:
                return Verdict(task, False, Witness("bad_path", path=path))
        return Verdict(task, True)

    if task is Task.ENUM_PRED:
        return Verdict(task, True)

    if task in (Task.ELIMINATION, Task.COUNTING, Task.UNRANKED_DA_PRED):
        p = spec
        if not isinstance(p, MinPredicate):
            raise EngineError(f"{task.value}: needs a MinPredicate spec")
        p.check_vars(q)
        if p.x0 in free:
            targets = (set(p.xs) & free) - {p.x0}
            path = find_bad_path(h, {p.x0}, targets)
            if path is not None:
                return Verdict(task, False, Witness("bad_path", path=path))
        return Verdict(task, True)

    raise EngineError(f"unknown task {task!r}")


def classify_all(q: ConjunctiveQuery, p: MinPredicate | None, r: MinRanking | None) -> list[Verdict]:
    """Verdicts for all eight tasks.

    Missing declarations degrade to the structural core: a predicate task
    with no predicate (or a ranking task with no ranking) is classified
    with an empty variable set, collapsing the side condition.
    """
    out = []
    for task in Task:
        if task in RANKING_TASKS:
            out.append(classify(task, q, r.xs if r else ()))
        elif task is Task.BOOLEAN:
            out.append(classify(task, q, p))
        else:
            spec = p if p is not None else MinPredicate(q.variables[0], (q.variables[0],))
            out.append(classify(task, q, spec))
    return out
