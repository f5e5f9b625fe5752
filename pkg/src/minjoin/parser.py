"""Query-text and data-file front end.

Grammar, one statement per line, `#` starts a comment:

    HEAD(v1,...,vk) :- Sym(v,...), Sym(v,...), ... .
    PREDICATE v <= MIN(v1,...,vm).      # or:  PREDICATE v < MIN(...)
    ORDER BY MIN(v1,...,vm).            # or:  ORDER BY MAX(...)

Data files: one delimiter-separated text file per relation symbol, no
header, one integer per column, file name equal to the symbol name.
"""

from __future__ import annotations

import re
from pathlib import Path

from .errors import DataFileError, EngineError, QuerySyntaxError
from .model import Atom, ConjunctiveQuery, Database, MinPredicate, MinRanking, Relation

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_HEAD_RE = re.compile(rf"^({_IDENT})\s*\(([^)]*)\)\s*:-\s*(.*)$")
_ATOM_RE = re.compile(rf"({_IDENT})\s*\(([^)]*)\)")
_PRED_RE = re.compile(rf"^PREDICATE\s+({_IDENT})\s*(<=|<)\s*MIN\s*\(([^)]*)\)\s*\.$")
_ORDER_RE = re.compile(r"^ORDER\s+BY\s+(MIN|MAX)\s*\(([^)]*)\)\s*\.$")


def _split_vars(blob: str, line_no: int, col: int, allow_empty: bool) -> tuple[str, ...]:
    blob = blob.strip()
    if not blob:
        if allow_empty:
            return ()
        raise QuerySyntaxError("empty variable list", line_no, col)
    out = []
    for piece in blob.split(","):
        v = piece.strip()
        if not re.fullmatch(_IDENT, v):
            raise QuerySyntaxError(f"bad variable name {v!r}", line_no, col)
        out.append(v)
    return tuple(out)


def parse_query(
    text: str,
) -> tuple[ConjunctiveQuery, MinPredicate | None, MinRanking | None]:
    """Parse query text into (query, optional predicate, optional ranking)."""
    query: ConjunctiveQuery | None = None
    predicate: MinPredicate | None = None
    ranking: MinRanking | None = None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        m = _PRED_RE.match(line)
        if m:
            if query is None:
                raise QuerySyntaxError("PREDICATE before the query head", line_no, 1)
            if predicate is not None:
                raise QuerySyntaxError("duplicate PREDICATE", line_no, 1)
            x0, op, blob = m.group(1), m.group(2), m.group(3)
            xs = _split_vars(blob, line_no, line.find("(") + 2, allow_empty=False)
            try:
                predicate = MinPredicate(x0, xs, strict=(op == "<"))
                predicate.check_vars(query)
            except EngineError as err:
                raise QuerySyntaxError(str(err), line_no, 1) from None
            continue

        m = _ORDER_RE.match(line)
        if m:
            if query is None:
                raise QuerySyntaxError("ORDER BY before the query head", line_no, 1)
            if ranking is not None:
                raise QuerySyntaxError("duplicate ORDER BY", line_no, 1)
            kind, blob = m.group(1), m.group(2)
            xs = _split_vars(blob, line_no, line.find("(") + 2, allow_empty=False)
            ranking = MinRanking(xs, maximize=(kind == "MAX"))
            qvars = set(query.variables)
            for v in xs:
                if v not in qvars:
                    raise QuerySyntaxError(f"ranking variable {v!r} not in the query", line_no, 1)
            continue

        m = _HEAD_RE.match(line)
        if m:
            if query is not None:
                raise QuerySyntaxError("second query head; one query per file", line_no, 1)
            name, head_blob, body = m.group(1), m.group(2), m.group(3)
            if not body.rstrip().endswith("."):
                raise QuerySyntaxError("missing final '.'", line_no, len(raw))
            body = body.rstrip()[:-1]
            head_vars = _split_vars(head_blob, line_no, line.find("(") + 2, allow_empty=True)
            atoms: list[Atom] = []
            arities: dict[str, int] = {}
            if not body.strip():
                raise QuerySyntaxError("empty body", line_no, len(line))
            pos, n = 0, len(body)
            offset = len(line) - len(body)  # body column offset within the line
            while True:
                while pos < n and body[pos].isspace():
                    pos += 1
                am = _ATOM_RE.match(body, pos)
                if am is None:
                    raise QuerySyntaxError("expected an atom", line_no, offset + pos + 1)
                sym = am.group(1)
                vars_ = _split_vars(am.group(2), line_no, offset + am.start(2) + 1, allow_empty=False)
                if sym in arities and arities[sym] != len(vars_):
                    raise QuerySyntaxError(
                        f"symbol {sym} used with two arities", line_no, offset + am.start() + 1
                    )
                arities[sym] = len(vars_)
                atoms.append(Atom(sym, vars_))
                pos = am.end()
                while pos < n and body[pos].isspace():
                    pos += 1
                if pos >= n:
                    break
                if body[pos] != ",":
                    raise QuerySyntaxError("expected ',' between atoms", line_no, offset + pos + 1)
                pos += 1
            body_vars = {v for a in atoms for v in a.vars}
            for v in head_vars:
                if v not in body_vars:
                    raise QuerySyntaxError(f"head variable {v!r} not in body", line_no, 1)
            query = ConjunctiveQuery(tuple(atoms), head_vars, name)
            continue

        raise QuerySyntaxError(f"unrecognised statement: {line[:40]!r}", line_no, 1)

    if query is None:
        raise QuerySyntaxError("no query found", 1, 1)
    return query, predicate, ranking


def parse_query_file(path: str | Path):
    return parse_query(Path(path).read_text())


_CELL_SPLIT = re.compile(r"[,;\s]+")


def load_database(paths: list[str | Path], query: ConjunctiveQuery) -> Database:
    """Load one data file per relation symbol of `query`.

    Each file must be named exactly like its symbol. Rows are deduplicated;
    an empty file is a legal empty relation.
    """
    by_name = {Path(p).name: Path(p) for p in paths}
    arities: dict[str, int] = {}
    for a in query.atoms:
        prev = arities.setdefault(a.symbol, a.arity)
        if prev != a.arity:
            raise DataFileError(f"symbol {a.symbol} used with two arities")
    relations: dict[str, Relation] = {}
    for sym, arity in arities.items():
        path = by_name.get(sym)
        if path is None:
            raise DataFileError(f"no data file for relation {sym!r}")
        rows: list[tuple[int, ...]] = []
        for ln, raw in enumerate(path.read_text().splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            cells = [c for c in _CELL_SPLIT.split(line) if c]
            if len(cells) != arity:
                raise DataFileError(
                    f"{path.name}:{ln}: row has {len(cells)} columns, {sym} has arity {arity}"
                )
            try:
                rows.append(tuple(int(c) for c in cells))
            except ValueError:
                raise DataFileError(f"{path.name}:{ln}: non-integer cell") from None
        relations[sym] = Relation.from_ints(sym, arity, rows)
    return Database(relations)


def load_database_dir(directory: str | Path, query: ConjunctiveQuery) -> Database:
    """Load every referenced symbol from `directory` (file name = symbol)."""
    directory = Path(directory)
    syms = {a.symbol for a in query.atoms}
    paths = [directory / s for s in syms]
    missing = [p.name for p in paths if not p.exists()]
    if missing:
        raise DataFileError(f"missing data file(s) in {directory}: {', '.join(sorted(missing))}")
    return load_database(paths, query)
