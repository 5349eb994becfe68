"""Incidence-matrix kernel against dense numpy oracles."""

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paperrec.errors import IndexOutOfRange
from paperrec.relmat import (BinaryIncidenceMatrix, NeighborList,
                             read_neighbors_tsv, top_n_from_scores,
                             write_neighbors_tsv)


def from_dense(dense) -> BinaryIncidenceMatrix:
    m = BinaryIncidenceMatrix(dense.shape[0], dense.shape[1])
    for i, j in zip(*np.nonzero(dense)):
        m.set(int(i), int(j), float(dense[i, j]))
    return m


def random_binary(rng, n_rows, n_cols, density=0.3):
    return (rng.random((n_rows, n_cols)) < density).astype(float)


class TestCooccur:
    def test_diagonal_is_zero(self):
        m = BinaryIncidenceMatrix.from_rows([{0, 1}, {0, 1}], 2)
        assert m.cooccur_columns(0, 0) == 0.0
        assert m.cooccur_columns(1, 1) == 0.0

    def test_disjoint_support_is_zero(self):
        m = BinaryIncidenceMatrix.from_rows([{0}, {1}], 2)
        assert m.cooccur_columns(0, 1) == 0.0

    def test_matches_dense_product(self):
        """Off-diagonal (MᵀM)_{ij} computed densely is the oracle."""
        rng = np.random.default_rng(42)
        for _ in range(20):
            dense = random_binary(rng, 10, 10)
            m = from_dense(dense)
            product = dense.T @ dense
            for i in range(10):
                for j in range(10):
                    expected = 0.0 if i == j else product[i, j]
                    assert m.cooccur_columns(i, j) == pytest.approx(expected)

    def test_symmetry(self):
        rng = np.random.default_rng(7)
        dense = random_binary(rng, 12, 8)
        m = from_dense(dense)
        for i in range(8):
            for j in range(8):
                assert m.cooccur_columns(i, j) == m.cooccur_columns(j, i)

    def test_bounded_by_min_column_sum(self):
        rng = np.random.default_rng(3)
        dense = random_binary(rng, 15, 6)
        m = from_dense(dense)
        sums = dense.sum(axis=0)
        for i in range(6):
            for j in range(6):
                if i != j:
                    assert m.cooccur_columns(i, j) <= min(sums[i], sums[j])

    def test_row_cooccur_is_transpose_column_cooccur(self):
        rng = np.random.default_rng(11)
        dense = random_binary(rng, 9, 9)
        m = from_dense(dense)
        t = m.transpose()
        for i in range(9):
            for j in range(9):
                assert t.cooccur_columns(i, j) == pytest.approx(
                    float(0.0 if i == j else (dense @ dense.T)[i, j]))

    def test_index_out_of_range(self):
        m = BinaryIncidenceMatrix(2, 2)
        with pytest.raises(IndexOutOfRange):
            m.cooccur_columns(0, 5)
        with pytest.raises(IndexOutOfRange):
            m.set(2, 0)


class TestNormalize:
    def test_row_of_four_ones_becomes_halves(self):
        m = BinaryIncidenceMatrix.from_rows([{0, 1, 2, 3}], 4)
        n = m.normalize("row")
        assert all(w == pytest.approx(0.5) for w in n.row(0).values())

    def test_empty_row_untouched(self):
        m = BinaryIncidenceMatrix.from_rows([{0}, set()], 2)
        n = m.normalize("row")
        assert n.row(1) == {}

    def test_column_norms_are_one(self):
        rng = np.random.default_rng(5)
        dense = random_binary(rng, 20, 10)
        dense[:, 4] = 0  # keep one empty column in the mix
        n = from_dense(dense).normalize("column")
        for j in range(10):
            norm = math.sqrt(sum(w * w for w in n.column(j).values()))
            if j == 4:
                assert norm == 0.0
            else:
                assert norm == pytest.approx(1.0, abs=1e-12)

    def test_sparsity_pattern_unchanged(self):
        rng = np.random.default_rng(9)
        dense = random_binary(rng, 8, 8)
        m = from_dense(dense)
        n = m.normalize("column")
        assert [(i, j) for i, j, _ in m.cells()] == \
               [(i, j) for i, j, _ in n.cells()]

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.sets(st.integers(0, 7), min_size=1), min_size=1,
                    max_size=12), st.integers(0, 10_000))
    def test_cosine_identity(self, row_sets, seed):
        """cos of raw columns == co-occurrence of column-normalized matrix."""
        m = BinaryIncidenceMatrix.from_rows(row_sets, 8)
        dense = np.zeros((m.n_rows, 8))
        for i, j, w in m.cells():
            dense[i, j] = w
        n = m.normalize("column")
        for i in range(8):
            for j in range(8):
                if i == j:
                    continue
                ni, nj = np.linalg.norm(dense[:, i]), np.linalg.norm(dense[:, j])
                if ni == 0 or nj == 0:
                    cos = 0.0
                else:
                    cos = float(dense[:, i] @ dense[:, j] / (ni * nj))
                assert abs(n.cooccur_columns(i, j) - cos) < 1e-9


class TestTopN:
    def test_isolated_column_gives_empty_list(self):
        m = BinaryIncidenceMatrix.from_rows([{0, 1}], 3)
        assert m.topn_neighbors(2, 5).entries == ()

    def test_short_list_when_few_neighbors(self):
        m = BinaryIncidenceMatrix.from_rows([{0, 1}], 3)
        assert len(m.topn_neighbors(0, 10).entries) == 1

    def test_matches_full_sort_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            dense = random_binary(rng, 20, 20)
            m = from_dense(dense)
            product = dense.T @ dense
            for i in range(20):
                scores = [(float(product[i, j]), str(j)) for j in range(20)
                          if j != i and product[i, j] > 0]
                oracle = sorted(scores, key=lambda p: (-p[0], p[1]))[:5]
                got = m.topn_neighbors(i, 5)
                assert [(s, t) for t, s in got.entries] == oracle

    def test_ties_break_lexicographically(self):
        m = BinaryIncidenceMatrix.from_rows([{0, 1, 2}], 3,
                                            col_labels=["b", "a", "c"])
        got = m.topn_neighbors(0, 3)
        assert got.targets() == ["a", "c"]

    def test_weighted_scores_after_normalization(self):
        m = BinaryIncidenceMatrix.from_rows([{0, 1}, {0, 1}, {1, 2}], 3)
        n = m.normalize("column")
        # cos(col0, col1) = 2/(sqrt(2)*sqrt(3)), cos(col1, col2) = 1/sqrt(3)
        got = dict(n.topn_neighbors(1, 2).entries)
        assert got["0"] == pytest.approx(2 / math.sqrt(6))
        assert got["2"] == pytest.approx(1 / math.sqrt(3))


class TestNeighborList:
    def test_rejects_increasing_scores(self):
        with pytest.raises(ValueError):
            NeighborList("x", (("a", 1.0), ("b", 2.0)))

    def test_rejects_self_pair(self):
        with pytest.raises(ValueError):
            NeighborList("x", (("x", 1.0),))

    def test_top_n_from_scores_drops_self_and_zeros(self):
        nl = top_n_from_scores("p", {"p": 9.0, "a": 2.0, "b": 0.0, "c": 2.0}, 5)
        assert nl.entries == (("a", 2.0), ("c", 2.0))


class TestTsvRoundTrip:
    def test_round_trip(self):
        lists = [NeighborList("p1", (("p2", 3.0), ("p3", 1.5))),
                 NeighborList("p2", (("p1", 3.0),))]
        buf = io.StringIO()
        write_neighbors_tsv(lists, buf)
        buf.seek(0)
        back = read_neighbors_tsv(buf)
        assert back["p1"].entries == (("p2", 3.0), ("p3", 1.5))
        assert back["p2"].entries == (("p1", 3.0),)

    def test_rank_column_is_checked(self):
        bad = "source_id\ttarget_id\tscore\trank\np1\tp2\t1.0\t2\n"
        with pytest.raises(ValueError):
            read_neighbors_tsv(io.StringIO(bad))
