import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbrkit.data import DatasetPair
from sbrkit.filters import (
    ClniConfig,
    FILTER_NAMES,
    KeywordScoreTable,
    apply_clni,
    apply_farsec_filter,
    build_all_filtered_sets,
    export_keyword_table_csv,
    extract_security_keywords,
    keyword_scores,
    score_report,
)

from conftest import make_matrix


def table_from_scores(keywords, scores, columns, support="none"):
    return KeywordScoreTable(
        keywords=tuple(keywords),
        scores=np.asarray(scores, dtype=np.float64),
        support=support,
        columns=tuple(columns),
    )


class TestExtractKeywords:
    def test_single_sbr_single_term(self):
        m = make_matrix([[1.0], [0.0]], [1, 0], names=("overflow",))
        assert extract_security_keywords(m, 5) == ["overflow"]

    def test_top_n_larger_than_vocab(self):
        m = make_matrix([[3.0, 1.0, 2.0]], [1], names=("aa", "bb", "cc"))
        assert extract_security_keywords(m, 10) == ["aa", "cc", "bb"]

    def test_ties_break_lexicographically(self):
        m = make_matrix([[1.0, 1.0]], [1], names=("zz", "aa"))
        assert extract_security_keywords(m, 2) == ["aa", "zz"]

    def test_no_sbr_rows_errors(self):
        m = make_matrix([[1.0]], [0], names=("aa",))
        with pytest.raises(ValueError, match="keyword table"):
            extract_security_keywords(m, 1)

    def test_terms_absent_from_sbrs_excluded(self):
        m = make_matrix([[1.0, 0.0], [0.0, 5.0]], [1, 0], names=("hit", "miss"))
        assert extract_security_keywords(m, 5) == ["hit"]


class TestKeywordScores:
    def test_pure_sbr_keyword_clamps_high(self):
        # keyword present only in SBRs: raw score 1.0, clamped to 0.99
        m = make_matrix([[1.0], [1.0], [0.0]], [1, 1, 0], names=("w",))
        t = keyword_scores(m, ["w"])
        assert t.scores[0] == 0.99

    def test_absent_from_sbrs_clamps_low(self):
        m = make_matrix([[0.0], [1.0]], [1, 0], names=("w",))
        t = keyword_scores(m, ["w"])
        assert t.scores[0] == 0.01

    def test_double_support_hand_value(self):
        # b=2 of n_b=4 SBRs, g=2 of n_g=8 NSBRs, doubled g:
        # (0.5) / (0.5 + 4/8) = 0.5
        feats = [[1.0]] * 2 + [[0.0]] * 2 + [[1.0]] * 2 + [[0.0]] * 6
        labels = [1] * 4 + [0] * 8
        t = keyword_scores(make_matrix(feats, labels, names=("w",)), ["w"], "double")
        assert t.scores[0] == pytest.approx(0.5, abs=1e-12)

    def test_square_support(self):
        # b=2 of 4 -> b'=4, ratio 1.0; g=4 of 8 -> 0.5; score 1/1.5
        feats = [[1.0]] * 2 + [[0.0]] * 2 + [[1.0]] * 4 + [[0.0]] * 4
        labels = [1] * 4 + [0] * 8
        t = keyword_scores(make_matrix(feats, labels, names=("w",)), ["w"], "square")
        assert t.scores[0] == pytest.approx(1.0 / 1.5, abs=1e-12)

    def test_empty_keywords_rejected(self):
        m = make_matrix([[1.0]], [1], names=("w",))
        with pytest.raises(ValueError):
            keyword_scores(m, [])

    @given(
        st.integers(1, 6),
        st.integers(1, 8),
        st.sampled_from(["none", "square", "double"]),
        st.integers(0, 2**31 - 1),
    )
    @settings(max_examples=40, deadline=None)
    def test_scores_always_clamped(self, n_b, n_g, support, seed):
        rng = np.random.default_rng(seed)
        feats = (rng.random((n_b + n_g, 3)) < 0.5).astype(float)
        labels = [1] * n_b + [0] * n_g
        t = keyword_scores(
            make_matrix(feats, labels, names=("a", "b", "c")), ["a", "b", "c"], support
        )
        assert np.all(t.scores >= 0.01) and np.all(t.scores <= 0.99)


class TestScoreReport:
    def test_no_keywords_present(self):
        t = table_from_scores(["w"], [0.9], [0])
        assert score_report(np.array([0.0]), t) == 0.0

    def test_single_keyword_identity(self):
        t = table_from_scores(["w"], [0.99], [0])
        assert score_report(np.array([2.5]), t) == pytest.approx(0.99, abs=1e-12)

    def test_two_keyword_product(self):
        # P = 0.9 * 0.8, Q = 0.1 * 0.2; P / (P + Q) = 0.72 / 0.74
        t = table_from_scores(["a", "b"], [0.9, 0.8], [0, 1])
        got = score_report(np.array([1.0, 1.0]), t)
        assert got == pytest.approx(0.72 / 0.74, abs=1e-12)

    @given(st.lists(st.floats(0.01, 0.99), min_size=1, max_size=8), st.integers(0, 255))
    @settings(max_examples=40, deadline=None)
    def test_in_unit_interval(self, scores, present_bits):
        cols = list(range(len(scores)))
        t = table_from_scores([f"k{i}" for i in cols], scores, cols)
        row = np.array([(present_bits >> i) & 1 for i in cols], dtype=float)
        assert 0.0 <= score_report(row, t) <= 1.0


def brute_force_expected_removals(m, table, threshold):
    keep = []
    for i in range(m.n_rows):
        row = m.features[i]
        present = [j for j, c in enumerate(table.columns) if row[c] > 0]
        if m.labels[i] == 1 or not present:
            keep.append(i)
            continue
        p = math.prod(table.scores[j] for j in present)
        q = math.prod(1.0 - table.scores[j] for j in present)
        if p / (p + q) < threshold:
            keep.append(i)
    return keep


class TestFarsecFilter:
    def build(self):
        # keyword w0 appears in all 4 SBRs and exactly 3 of 30 NSBRs
        rng = np.random.default_rng(3)
        feats = np.zeros((34, 2))
        labels = np.array([1] * 4 + [0] * 30)
        feats[:4, 0] = 1.0
        feats[4:7, 0] = 1.0
        feats[:, 1] = (rng.random(34) < 0.5).astype(float)
        return make_matrix(feats, labels, names=("w0", "w1"))

    def test_exactly_flagged_nsbrs_removed(self):
        m = self.build()
        table = keyword_scores(m, extract_security_keywords(m, 10))
        out = apply_farsec_filter(m, table, 0.75)
        expected = brute_force_expected_removals(m, table, 0.75)
        np.testing.assert_array_equal(out.features, m.features[expected])
        np.testing.assert_array_equal(out.labels, m.labels[expected])

    def test_unreachable_threshold_keeps_all(self):
        m = self.build()
        table = keyword_scores(m, ["w0"])
        out = apply_farsec_filter(m, table, 1.0)
        # a score of exactly 1.0 cannot occur because scores clamp at 0.99
        assert out.n_rows == m.n_rows

    def test_zero_scoring_rows_survive(self):
        m = make_matrix([[1.0], [0.0], [0.0]], [1, 0, 0], names=("w",))
        table = keyword_scores(m, ["w"])
        assert apply_farsec_filter(m, table, 0.75).n_rows == 3

    def test_sbrs_never_removed(self):
        m = self.build()
        table = keyword_scores(m, ["w0"])
        out = apply_farsec_filter(m, table, 0.5)
        assert int(out.labels.sum()) == int(m.labels.sum())

    def test_idempotent(self):
        m = self.build()
        table = keyword_scores(m, ["w0", "w1"])
        once = apply_farsec_filter(m, table, 0.75)
        twice = apply_farsec_filter(once, table, 0.75)
        np.testing.assert_array_equal(once.features, twice.features)


class TestClni:
    def planted(self):
        # one NSBR sits inside a tight SBR cluster; the rest of the NSBRs
        # form their own far-away cluster
        pts = [[0.0, 0.0]]
        labels = [0]
        for ang in np.linspace(0, 2 * np.pi, 5, endpoint=False):
            pts.append([0.3 * np.cos(ang), 0.3 * np.sin(ang)])
            labels.append(1)
        for i in range(8):
            pts.append([50.0 + i * 0.1, 50.0])
            labels.append(0)
        return make_matrix(pts, labels)

    def test_planted_noise_removed(self):
        m = self.planted()
        out = apply_clni(m, ClniConfig())
        assert out.n_rows == m.n_rows - 1
        # the surviving rows are everything but the planted point
        np.testing.assert_array_equal(out.features, m.features[1:])

    def test_same_label_everywhere_keeps_all(self):
        m = make_matrix(np.random.default_rng(0).random((12, 2)), [0] * 12)
        out = apply_clni(m, ClniConfig())
        assert out.n_rows == 12

    def test_sbrs_never_removed(self):
        m = self.planted()
        out = apply_clni(m, ClniConfig())
        assert int(out.labels.sum()) == int(m.labels.sum())

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            ClniConfig(removal_threshold=1.5)

    def test_degenerate_dataset_errors(self):
        m = make_matrix([[0.0], [1.0], [2.0]], [0, 1, 0])
        with pytest.raises(ValueError, match="CLNI"):
            apply_clni(m, ClniConfig(n_neighbors=5))


class TestBuildAllFilteredSets:
    def build_pair(self):
        rng = np.random.default_rng(11)
        n = 40
        feats = (rng.random((n, 4)) < 0.4).astype(float) * rng.random((n, 4))
        labels = np.array([1] * 6 + [0] * (n - 6))
        feats[:6, 0] += 1.0  # keyword signal concentrated in SBRs
        feats[6:10, 0] += 1.0  # a few noisy NSBRs carry it too
        train = make_matrix(feats, labels)
        test = make_matrix(rng.random((8, 4)), [1, 0, 0, 0, 1, 0, 0, 0])
        return DatasetPair(train=train, test=test, project="toy")

    def test_all_eight_names_present(self):
        out = build_all_filtered_sets(self.build_pair(), top_n=4)
        assert set(out) == set(FILTER_NAMES)

    def test_train_is_identity(self):
        pair = self.build_pair()
        out = build_all_filtered_sets(pair, top_n=4)
        assert out["train"] is pair.train

    def test_composition_row_counts(self):
        out = build_all_filtered_sets(self.build_pair(), top_n=4)
        for base in ("farsec", "farsecsq", "farsectwo"):
            assert out["clni" + base].n_rows <= out[base].n_rows
        for name, m in out.items():
            assert m.n_rows <= out["train"].n_rows

    def test_sbr_count_invariant_everywhere(self):
        pair = self.build_pair()
        out = build_all_filtered_sets(pair, top_n=4)
        sbr = int(pair.train.labels.sum())
        for name, m in out.items():
            assert int(m.labels.sum()) == sbr, name


class TestExport:
    def test_keyword_table_csv(self, tmp_path):
        t = table_from_scores(["aa", "bb"], [0.5, 0.25], [0, 1], "double")
        path = tmp_path / "table.csv"
        export_keyword_table_csv(t, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "term,score,support"
        assert lines[1] == "aa,0.5,double"
