"""Sparse binary/weighted incidence matrices and top-N neighbor extraction.

This is the shared kernel under every relatedness measure: citation
matrices (papers × papers) and session matrices (sessions × papers) both
end up here.  Column co-occurrence of the raw binary matrix gives the
plain counts; co-occurrence of the column-normalized matrix gives cosine.

Kept in pure Python on purpose: tests check the results against dense
matrix products computed with numpy, and the two routes stay independent.
"""

from __future__ import annotations

import dataclasses
import heapq
import math
from typing import Iterable, Iterator, TextIO

from .errors import IndexOutOfRange


@dataclasses.dataclass(frozen=True)
class NeighborList:
    """Top-N related items for one source, scores non-increasing."""
    source: str
    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        scores = [s for _, s in self.entries]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError(f"{self.source}: scores increase along the list")
        if any(t == self.source for t, _ in self.entries):
            raise ValueError(f"{self.source}: self-pair in neighbor list")

    def targets(self) -> list[str]:
        return [t for t, _ in self.entries]


class BinaryIncidenceMatrix:
    """Sparse matrix with strictly positive weights (1.0 when binary).

    Rows and columns are integer indices; columns may carry string labels
    so neighbor lists come out keyed by paper id.  Mutation stops once the
    matrix is handed to any computation (by convention, not enforcement).
    """

    def __init__(self, n_rows: int, n_cols: int,
                 col_labels: list[str] | None = None):
        if col_labels is not None and len(col_labels) != n_cols:
            raise ValueError("label count does not match column count")
        self.n_rows = n_rows
        self.n_cols = n_cols
        self.col_labels = col_labels
        self._rows: dict[int, dict[int, float]] = {}
        self._cols: dict[int, dict[int, float]] = {}

    def set(self, row: int, col: int, weight: float = 1.0) -> None:
        if not (0 <= row < self.n_rows and 0 <= col < self.n_cols):
            raise IndexOutOfRange(f"cell ({row}, {col}) outside "
                                  f"{self.n_rows}x{self.n_cols}")
        if weight <= 0:
            raise ValueError(f"non-positive weight {weight} at ({row}, {col})")
        if col in self._rows.get(row, ()):
            raise ValueError(f"duplicate cell ({row}, {col})")
        self._rows.setdefault(row, {})[col] = weight
        self._cols.setdefault(col, {})[row] = weight

    @classmethod
    def from_rows(cls, row_sets: Iterable[Iterable[int]], n_cols: int,
                  col_labels: list[str] | None = None) -> "BinaryIncidenceMatrix":
        rows = [set(r) for r in row_sets]
        m = cls(len(rows), n_cols, col_labels)
        for i, cols in enumerate(rows):
            for j in cols:
                m.set(i, j)
        return m

    def row(self, i: int) -> dict[int, float]:
        self._check_row(i)
        return self._rows.get(i, {})

    def column(self, j: int) -> dict[int, float]:
        self._check_col(j)
        return self._cols.get(j, {})

    def nnz(self) -> int:
        return sum(len(r) for r in self._rows.values())

    def cells(self) -> Iterator[tuple[int, int, float]]:
        for i in sorted(self._rows):
            for j in sorted(self._rows[i]):
                yield i, j, self._rows[i][j]

    def _check_row(self, i: int) -> None:
        if not 0 <= i < self.n_rows:
            raise IndexOutOfRange(f"row {i} outside 0..{self.n_rows - 1}")

    def _check_col(self, j: int) -> None:
        if not 0 <= j < self.n_cols:
            raise IndexOutOfRange(f"column {j} outside 0..{self.n_cols - 1}")

    def transpose(self) -> "BinaryIncidenceMatrix":
        t = BinaryIncidenceMatrix(self.n_cols, self.n_rows)
        t._rows = {j: dict(rows) for j, rows in self._cols.items()}
        t._cols = {i: dict(cols) for i, cols in self._rows.items()}
        return t

    def cooccur_columns(self, i: int, j: int) -> float:
        """(MᵀM)_{ij} with a forced zero diagonal."""
        self._check_col(i)
        self._check_col(j)
        if i == j:
            return 0.0
        a = self._cols.get(i, {})
        b = self._cols.get(j, {})
        if len(b) < len(a):
            a, b = b, a
        return sum(w * b[r] for r, w in a.items() if r in b)

    def normalize(self, axis: str) -> "BinaryIncidenceMatrix":
        """Scale each row or column vector to L2 norm 1 (empty ones stay)."""
        if axis not in ("row", "column"):
            raise ValueError(f"axis must be 'row' or 'column', got {axis!r}")
        vectors = self._rows if axis == "row" else self._cols
        scale = {k: 1.0 / math.sqrt(sum(w * w for w in vec.values()))
                 for k, vec in vectors.items() if vec}
        out = BinaryIncidenceMatrix(self.n_rows, self.n_cols, self.col_labels)
        for i, cols in self._rows.items():
            for j, w in cols.items():
                s = scale[i] if axis == "row" else scale[j]
                out._rows.setdefault(i, {})[j] = w * s
                out._cols.setdefault(j, {})[i] = w * s
        return out

    def neighbor_scores(self, i: int) -> dict[int, float]:
        """Weighted co-occurrence of column i against every other column."""
        self._check_col(i)
        scores: dict[int, float] = {}
        for r, wi in self._cols.get(i, {}).items():
            for j, wj in self._rows[r].items():
                if j != i:
                    scores[j] = scores.get(j, 0.0) + wi * wj
        return scores

    def _label(self, j: int) -> str:
        return self.col_labels[j] if self.col_labels is not None else str(j)

    def topn_neighbors(self, i: int, n: int) -> NeighborList:
        if n < 1:
            raise ValueError(f"N must be >= 1, got {n}")
        scores = self.neighbor_scores(i)
        top = heapq.nsmallest(n, scores.items(),
                              key=lambda kv: (-kv[1], self._label(kv[0])))
        return NeighborList(self._label(i),
                            tuple((self._label(j), s) for j, s in top))

    def all_topn(self, n: int) -> list[NeighborList]:
        return [self.topn_neighbors(i, n) for i in range(self.n_cols)]


def top_n_from_scores(source: str, scores: dict[str, float],
                      n: int) -> NeighborList:
    """Heap-select the N best (score desc, id asc) entries, excluding self."""
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    items = [(t, s) for t, s in scores.items() if t != source and s != 0]
    top = heapq.nsmallest(n, items, key=lambda kv: (-kv[1], kv[0]))
    return NeighborList(source, tuple(top))


def write_neighbors_tsv(lists: Iterable[NeighborList], out: TextIO) -> None:
    out.write("source_id\ttarget_id\tscore\trank\n")
    for nl in lists:
        for rank, (target, score) in enumerate(nl.entries, start=1):
            out.write(f"{nl.source}\t{target}\t{score:.12g}\t{rank}\n")


def read_neighbors_tsv(inp: TextIO) -> dict[str, NeighborList]:
    raw: dict[str, list[tuple[str, float]]] = {}
    for lineno, line in enumerate(inp):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split("\t")
        if lineno == 0 and parts[0] == "source_id":
            continue
        if len(parts) != 4:
            raise ValueError(f"line {lineno + 1}: expected 4 columns")
        source, target, score, rank = parts
        entries = raw.setdefault(source, [])
        if int(rank) != len(entries) + 1:
            raise ValueError(f"line {lineno + 1}: rank out of sequence")
        entries.append((target, float(score)))
    return {s: NeighborList(s, tuple(e)) for s, e in raw.items()}
