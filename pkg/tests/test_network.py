import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from xsdf.errors import LabelMismatch, NotSquare
from xsdf.estimators import SdfParams
from xsdf.network import (
    block_average,
    connectedness,
    signal_importance,
    write_blocks,
    write_connectedness,
    write_importance,
)
from xsdf.panel import MonthStamp


def params_with_weights(lam):
    lam = np.asarray(lam, dtype=float)
    lam = lam / np.linalg.norm(lam)
    n = 2
    phi = np.zeros(n * n)
    phi[0] = 1.0
    return SdfParams(lam, phi, objective="max_sharpe")


class TestConnectedness:
    def test_diagonal_matrix_is_silent(self):
        rep = connectedness(np.diag([0.5, -0.3, 0.8]))
        assert_array_equal(rep.from_, 0.0)
        assert_array_equal(rep.to, 0.0)
        assert_array_equal(rep.net, 0.0)
        assert rep.total == 0.0

    def test_hand_computed_two_by_two(self):
        rep = connectedness(np.array([[0.1, 0.3], [-0.2, 0.4]]))
        assert_allclose(rep.from_, [0.3, 0.2], atol=1e-15)
        assert_allclose(rep.to, [0.2, 0.3], atol=1e-15)
        assert_allclose(rep.net, [-0.1, 0.1], atol=1e-15)
        assert_allclose(rep.total, 0.25, atol=1e-15)

    def test_symmetric_matrix_has_zero_net(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((4, 4))
        rep = connectedness(a + a.T)
        assert_allclose(rep.net, 0.0, atol=1e-12)

    def test_not_square(self):
        with pytest.raises(NotSquare):
            connectedness(np.ones((2, 3)))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=2, max_value=7), st.integers(min_value=0, max_value=2**31 - 1))
    def test_identities(self, n, seed):
        psi = np.random.default_rng(seed).standard_normal((n, n))
        rep = connectedness(psi)
        assert abs(rep.net.sum()) < 1e-10
        assert_allclose(rep.from_.sum() / n, rep.total, atol=1e-12)
        assert_allclose(rep.to.sum() / n, rep.total, atol=1e-12)
        assert np.all(rep.from_ >= 0) and np.all(rep.to >= 0) and rep.total >= 0

    @settings(max_examples=25, deadline=None)
    @given(
        st.integers(min_value=2, max_value=6),
        st.floats(min_value=0.01, max_value=50.0),
        st.integers(min_value=0, max_value=2**31 - 1),
    )
    def test_positive_homogeneity(self, n, c, seed):
        psi = np.random.default_rng(seed).standard_normal((n, n))
        base = connectedness(psi)
        scaled = connectedness(c * psi)
        assert_allclose(scaled.from_, c * base.from_, rtol=1e-10)
        assert_allclose(scaled.total, c * base.total, rtol=1e-10)

    def test_total_permutation_invariant(self):
        rng = np.random.default_rng(3)
        psi = rng.standard_normal((5, 5))
        perm = rng.permutation(5)
        permuted = psi[np.ix_(perm, perm)]
        assert_allclose(connectedness(permuted).total, connectedness(psi).total, atol=1e-12)


class TestBlockAverage:
    def test_all_ones(self):
        rep = block_average(np.ones((2, 2)), ["small", "big"])
        assert set(rep.averages.values()) == {1.0}
        assert len(rep.averages) == 4

    def test_block_diagonal(self):
        psi = np.zeros((4, 4))
        psi[:2, :2] = 1.0
        psi[2:, 2:] = 2.0
        rep = block_average(psi, ["s", "s", "b", "b"])
        assert rep.averages[("s", "s")] == 1.0
        assert rep.averages[("b", "b")] == 2.0
        assert rep.averages[("s", "b")] == 0.0
        assert rep.averages[("b", "s")] == 0.0

    def test_against_loop_oracle(self):
        rng = np.random.default_rng(8)
        psi = rng.standard_normal((4, 4))
        labels = ["s", "s", "b", "b"]
        rep = block_average(psi, labels)
        for g_from in ("s", "b"):
            for g_to in ("s", "b"):
                cells = [
                    abs(psi[i, j])
                    for i in range(4)
                    for j in range(4)
                    if labels[i] == g_from and labels[j] == g_to
                ]
                assert_allclose(rep.averages[(g_from, g_to)], np.mean(cells), atol=1e-12)

    def test_diagonal_cells_included(self):
        psi = np.diag([1.0, 1.0])
        rep = block_average(psi, ["s", "s"])
        assert rep.averages[("s", "s")] == 0.5  # two diagonal ones over four cells

    def test_label_mismatch(self):
        with pytest.raises(LabelMismatch):
            block_average(np.ones((3, 3)), ["a", "b"])


class TestSignalImportance:
    def test_single_window_absolute_values(self):
        rep = signal_importance([params_with_weights([0.6, -0.8])], ["s1", "s2"])
        assert_allclose(rep.importance, [0.6, 0.8], atol=1e-12)

    def test_sign_flip_invariant(self):
        lam = [0.6, -0.8]
        one = signal_importance([params_with_weights(lam)], ["s1", "s2"])
        both = signal_importance(
            [params_with_weights(lam), params_with_weights([-l for l in lam])],
            ["s1", "s2"],
        )
        assert_allclose(both.importance, one.importance, atol=1e-12)

    def test_theme_rollup(self):
        rep = signal_importance(
            [params_with_weights([0.6, -0.8])],
            ["s1", "s2"],
            theme_map={"s1": "value", "s2": "value"},
        )
        assert_allclose(rep.theme_importance["value"], 0.7, atol=1e-12)

    def test_ranking_sorted(self):
        rep = signal_importance([params_with_weights([0.6, -0.8])], ["s1", "s2"])
        assert rep.ranking()[0][0] == "s2"

    def test_empty_history_rejected(self):
        with pytest.raises(ValueError):
            signal_importance([], ["s1"])


class TestWriters:
    def test_connectedness_csv(self, tmp_path):
        rep = connectedness(np.array([[0.1, 0.3], [-0.2, 0.4]]), date=MonthStamp(2001, 5))
        write_connectedness(
            [rep], ["a1", "a2"], tmp_path / "conn.csv", total_path=tmp_path / "tot.csv"
        )
        lines = (tmp_path / "conn.csv").read_text().strip().splitlines()
        assert lines[0] == "date,asset,from,to,net"
        assert lines[1].startswith("2001-05,a1,0.3,")
        tot = (tmp_path / "tot.csv").read_text().strip().splitlines()
        assert tot == ["date,total", "2001-05,0.25"]

    def test_blocks_csv(self, tmp_path):
        rep = block_average(np.ones((2, 2)), ["s", "b"], date=MonthStamp(2001, 5))
        write_blocks([rep], tmp_path / "blocks.csv")
        lines = (tmp_path / "blocks.csv").read_text().strip().splitlines()
        assert lines[0] == "date,from_group,to_group,avg_abs"
        assert len(lines) == 5

    def test_importance_csv(self, tmp_path):
        rep = signal_importance([params_with_weights([0.6, -0.8])], ["s1", "s2"])
        write_importance(rep, tmp_path / "imp.csv", theme_map={"s1": "value"})
        lines = (tmp_path / "imp.csv").read_text().strip().splitlines()
        assert lines[0] == "signal,theme,importance"
        assert lines[1] == "s1,value,0.6"
