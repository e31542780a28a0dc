"""Delimited-text readers and writers for count matrices, edge lists and tables."""
from __future__ import annotations

import csv
import json
import math
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from .core import CountMatrix, CycleError, Dag, DataError, NeighborSets


class ParseError(DataError):
    """Malformed input file; carries the 1-based line and column."""

    def __init__(self, path, line: int, column: int | None, msg: str):
        self.path, self.line, self.column = str(path), line, column
        where = f"line {line}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{path}: {where}: {msg}")


def _delimiter(header: str) -> str:
    return "\t" if header.count("\t") > header.count(",") else ","


def _read_table(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    with open(path, newline="") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError(path, 1, None, "missing header row")
    delim = _delimiter(lines[0])
    rows = list(csv.reader(lines, delimiter=delim))
    header = [h.strip() for h in rows[0]]
    body = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(path, lineno, None, f"expected {len(header)} fields, found {len(row)}")
        body.append((lineno, row))
    return header, body


def _parse_matrix(path, integer: bool):
    header, body = _read_table(path)
    if len(set(header)) != len(header):
        raise ParseError(path, 1, None, "duplicate column names")
    out = np.empty((len(body), len(header)), dtype=np.int64 if integer else np.float64)
    for r, (lineno, row) in enumerate(body):
        for c, cell in enumerate(row):
            s = cell.strip()
            try:
                v = int(s) if integer else float(s)
            except ValueError:
                kind = "non-negative integer" if integer else "number"
                raise ParseError(path, lineno, c + 1, f"expected a {kind}, got {s!r}") from None
            if (not integer and not math.isfinite(v)) or v < 0:
                raise ParseError(path, lineno, c + 1, f"negative or non-finite value {s!r}")
            out[r, c] = v
    if out.shape[0] == 0:
        raise ParseError(path, 2, None, "no data rows")
    return header, out


def read_counts(path) -> CountMatrix:
    """Header row of variable names, then one sample per row (comma or tab separated)."""
    header, values = _parse_matrix(path, integer=True)
    try:
        return CountMatrix(values, header)
    except DataError as exc:
        raise ParseError(path, 1, None, str(exc)) from None


def read_matrix(path) -> tuple[list[str], np.ndarray]:
    """Like :func:`read_counts` but accepts non-negative reals."""
    return _parse_matrix(path, integer=False)


def write_counts(path, data: CountMatrix) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(data.names)
        w.writerows(data.values.tolist())


def write_edges(path, edges, names: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["from", "to"])
        for k, j in sorted(edges):
            w.writerow([names[k], names[j]])


def write_dag(path, dag: Dag, names: Sequence[str]) -> None:
    write_edges(path, dag.edges, names)


def write_skeleton(path, sets: NeighborSets, names: Sequence[str]) -> None:
    write_edges(path, sets.undirected_edges(), names)


def read_edge_pairs(path, names: Sequence[str]) -> list[tuple[int, int]]:
    index = {s: i for i, s in enumerate(names)}
    header, body = _read_table(path)
    if [h.lower() for h in header] != ["from", "to"]:
        raise ParseError(path, 1, None, "edge list header must be 'from,to'")
    pairs = []
    for lineno, row in body:
        ends = []
        for c, s in enumerate(row):
            s = s.strip()
            if s not in index:
                raise ParseError(path, lineno, c + 1, f"unknown node {s!r}")
            ends.append(index[s])
        pairs.append((ends[0], ends[1]))
    return pairs


def read_edges(path, names: Sequence[str]) -> Dag:
    pairs = read_edge_pairs(path, names)
    try:
        return Dag(len(names), pairs)
    except CycleError as exc:
        cyc = " -> ".join(names[v] for v in [*exc.cycle, exc.cycle[0]])
        raise ParseError(path, 1, None, f"edges contain a directed cycle: {cyc}") from None


def write_rows(path, rows: Sequence[dict], fields: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fields), lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k, "")) for k in fields})


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_dot(path, dag: Dag, names: Sequence[str]) -> None:
    with open(path, "w") as fh:
        fh.write("digraph learned {\n")
        for name in names:
            fh.write(f'  "{name}";\n')
        for k, j in dag.sorted_edges():
            fh.write(f'  "{names[k]}" -> "{names[j]}";\n')
        fh.write("}\n")
