import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbrkit import evaluate
from sbrkit.balance import (
    SmoteConfig,
    SmotunedConfig,
    minkowski_distance,
    smote,
    smote_hook,
    smote_param_space,
    smotuned,
    synthesize,
)
from sbrkit.optimize import DeConfig

from conftest import imbalanced_blobs, make_matrix


class TestMinkowski:
    def test_euclidean_identity(self):
        assert minkowski_distance([0.0, 0.0], [3.0, 4.0], 2.0) == pytest.approx(5.0, abs=1e-12)

    def test_zero_on_equal(self):
        assert minkowski_distance([1.0, 2.0], [1.0, 2.0], 3.0) == 0.0

    def test_manhattan_identity(self):
        assert minkowski_distance([0.0, 0.0], [1.0, 1.0], 1.0) == pytest.approx(2.0, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            minkowski_distance([1.0], [1.0, 2.0], 2.0)

    @given(
        st.lists(st.floats(-50, 50), min_size=1, max_size=6),
        st.lists(st.floats(-50, 50), min_size=1, max_size=6),
        st.floats(1.0, 6.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_symmetry_and_closed_forms(self, a, b, r):
        n = min(len(a), len(b))
        a, b = np.asarray(a[:n]), np.asarray(b[:n])
        d = minkowski_distance(a, b, r)
        assert d == pytest.approx(minkowski_distance(b, a, r), rel=1e-9, abs=1e-12)
        assert minkowski_distance(a, a, r) == 0.0
        e = float(np.sqrt(np.sum((a - b) ** 2)))
        m = float(np.sum(np.abs(a - b)))
        assert minkowski_distance(a, b, 2.0) == pytest.approx(e, rel=1e-9, abs=1e-12)
        assert minkowski_distance(a, b, 1.0) == pytest.approx(m, rel=1e-9, abs=1e-12)


class TestSynthesize:
    def test_lone_minority_duplicates(self):
        x0 = np.array([1.0, 2.0])
        rng = np.random.default_rng(0)
        got = synthesize(x0, x0[None, :], k=5, r=2.0, rng=rng)
        np.testing.assert_array_equal(got, x0)

    def test_on_segment(self):
        x0 = np.array([0.0, 0.0])
        minority = np.array([[0.0, 0.0], [2.0, 2.0]])
        for seed in range(20):
            got = synthesize(x0, minority, k=3, r=2.0, rng=np.random.default_rng(seed))
            assert 0.0 <= got[0] <= 2.0
            assert got[0] == pytest.approx(got[1], abs=1e-12)

    def test_cluster_bounding_box(self):
        rng = np.random.default_rng(5)
        cluster = rng.uniform(3.0, 4.0, (30, 4))
        lo, hi = cluster.min(axis=0), cluster.max(axis=0)
        gen = np.random.default_rng(6)
        for _ in range(1000):
            x0 = cluster[gen.integers(30)]
            got = synthesize(x0, cluster, k=5, r=2.0, rng=gen)
            assert np.all(got >= lo - 1e-12) and np.all(got <= hi + 1e-12)


def counts(m):
    return int(np.sum(m.labels == 1)), int(np.sum(m.labels == 0))


def build_counts(n_min, n_maj, seed=0, dims=3):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1, (n_min, dims)), rng.normal(5, 1, (n_maj, dims))])
    y = np.array([1] * n_min + [0] * n_maj)
    return make_matrix(X, y)


def is_convex_combination(row, parents, tol=1e-9):
    """True when row lies on a segment between some pair of parent rows."""
    for i in range(len(parents)):
        for j in range(len(parents)):
            if i == j:
                continue
            a, b = parents[i], parents[j]
            lo = np.minimum(a, b) - tol
            hi = np.maximum(a, b) + tol
            if not (np.all(row >= lo) and np.all(row <= hi)):
                continue
            diff = b - a
            mask = np.abs(diff) > tol
            if not mask.any():
                if np.allclose(row, a, atol=tol):
                    return True
                continue
            u = (row[mask] - a[mask]) / diff[mask]
            if np.ptp(u) <= 1e-6 and -1e-9 <= u[0] <= 1 + 1e-9:
                if np.allclose(row[~mask], a[~mask], atol=tol):
                    return True
    return False


class TestSmote:
    def test_grow_and_shrink_to_target(self):
        m = build_counts(5, 200)
        out = smote(m, SmoteConfig(m=50, mode="count", seed=1))
        assert counts(out) == (50, 50)

    def test_rich_minority_untouched(self):
        m = build_counts(60, 40)
        out = smote(m, SmoteConfig(m=50, mode="count", seed=1))
        assert counts(out) == (60, 40)

    def test_synthetics_are_convex_combinations(self):
        m = build_counts(5, 200, seed=3)
        out = smote(m, SmoteConfig(m=50, mode="count", seed=2))
        minority = m.features[m.labels == 1]
        synth = out.features[len(m.features[m.labels == 0][:50]) + 5 :]
        assert synth.shape[0] == 45
        for row in synth:
            assert is_convex_combination(row, minority)

    def test_original_minority_rows_retained(self):
        m = build_counts(7, 80, seed=4)
        out = smote(m, SmoteConfig(m=60, mode="count", seed=3))
        original = {tuple(r) for r in m.features[m.labels == 1]}
        kept = {tuple(r) for r in out.features[out.labels == 1]}
        assert original <= kept

    def test_percent_mode_default_balances(self):
        m = build_counts(29, 571, seed=5)
        out = smote(m, SmoteConfig(seed=4))  # 50 percent of 600 rows
        assert counts(out) == (300, 300)

    def test_single_class_rejected(self):
        m = make_matrix([[0.0], [1.0]], [1, 1])
        with pytest.raises(ValueError):
            smote(m, SmoteConfig(m=50, mode="count"))

    def test_deterministic(self):
        m = build_counts(6, 90, seed=6)
        a = smote(m, SmoteConfig(m=64, mode="count", seed=9))
        b = smote(m, SmoteConfig(m=64, mode="count", seed=9))
        np.testing.assert_array_equal(a.features, b.features)

    @pytest.mark.parametrize("n_min,n_maj", [(1, 40), (5, 40), (40, 40), (60, 40),
                                             (1, 200), (5, 200), (40, 200), (60, 200)])
    @pytest.mark.parametrize("target", [50, 100, 400])
    def test_two_while_loop_grid(self, n_min, n_maj, target):
        m = build_counts(n_min, n_maj, seed=n_min + n_maj)
        out = smote(m, SmoteConfig(m=target, mode="count", seed=7))
        got_min, got_maj = counts(out)
        assert got_min == max(n_min, target)
        assert got_maj == min(n_maj, target)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SmoteConfig(k=0)
        with pytest.raises(ValueError):
            SmoteConfig(m=30, mode="count")
        with pytest.raises(ValueError):
            SmoteConfig(r=0.5)


class TestSmotuned:
    def test_returns_config_in_bounds_and_budget(self):
        train = imbalanced_blobs(n=160, minority_frac=0.1, n_features=4, seed=8)
        cfg = SmotunedConfig(de=DeConfig(np=30, iter_cap=2, seed=0), cv_folds=3)
        best_cfg, rebalanced, history = smotuned(train, "nb", cfg)
        assert 1 <= best_cfg.k <= 20
        assert 50 <= best_cfg.m <= 400
        assert 1.0 <= best_cfg.r <= 6.0
        assert best_cfg.mode == "count"
        gens = history[-1][0]
        assert history[-1][2] <= 30 * (1 + gens)
        got_min, got_maj = counts(rebalanced)
        assert got_min == max(int(train.labels.sum()), best_cfg.m)

    def test_population_invariant(self):
        with pytest.raises(ValueError):
            SmotunedConfig(de=DeConfig(np=20))

    def test_tuned_beats_default_smote_in_median(self):
        # paired comparison on the same folds, ten seeds
        tuned_g, default_g = [], []
        for seed in range(10):
            m = imbalanced_blobs(n=220, minority_frac=1 / 21, n_features=6,
                                 separation=2.5, seed=seed)
            cfg = SmotunedConfig(
                de=DeConfig(np=30, iter_cap=10, seed=seed), cv_folds=5, cv_seed=seed
            )
            best_cfg, _, _ = smotuned(m, "nb", cfg)
            plan = evaluate.CvPlan(n_folds=5, n_repeats=1, seed=1000 + seed)
            tuned = evaluate.cross_validate(
                "nb", None, m, plan, pretrain_hook=smote_hook(best_cfg)
            )
            default = evaluate.cross_validate(
                "nb", None, m, plan, pretrain_hook=smote_hook(SmoteConfig())
            )
            tuned_g.append(tuned.median_g)
            default_g.append(default.median_g)
        assert np.median(tuned_g) >= np.median(default_g)

    def test_space_matches_bounds(self):
        space = smote_param_space()
        assert space.names == ("k", "m", "r")
        assert list(space.lows) == [1.0, 50.0, 1.0]
        assert list(space.highs) == [20.0, 400.0, 6.0]
