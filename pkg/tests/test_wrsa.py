"""Weighted RSA: fold construction, NNLS solver, CV evaluation."""

import itertools

import numpy as np
import pytest
import scipy.optimize
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_rdm, stack_of, symmetrize
from net2rdm.core import RDM
from net2rdm.errors import (
    InvalidParameter,
    NnlsConvergenceWarning,
    TestFoldTooSmall,
    TooManyFolds,
)
from net2rdm.rdm import flatten_upper
from net2rdm.wrsa import (
    WrsaConfig,
    condition_folds,
    fold_pair_masks,
    nnls_fit,
    wrsa_evaluate,
)


def active_set_oracle_2var(A, y):
    """Brute-force the 2-variable NNLS KKT system over all support sets."""
    G, h = A.T @ A, A.T @ y
    candidates = []
    for support in [(), (0,), (1,), (0, 1)]:
        w = np.zeros(2)
        if support:
            idx = list(support)
            w[idx] = np.linalg.solve(G[np.ix_(idx, idx)], h[idx])
        grad = G @ w - h
        feasible = np.all(w >= -1e-12)
        optimal = all(
            (w[i] > 1e-12 and abs(grad[i]) < 1e-8) or (w[i] <= 1e-12 and grad[i] >= -1e-8)
            for i in range(2)
        )
        if feasible and optimal:
            candidates.append(np.maximum(w, 0.0))
    assert candidates, "oracle found no KKT point"
    return candidates[0]


class TestConditionFolds:
    def test_even_split(self):
        folds = condition_folds(10, 5, seed=0)
        assert [len(f) for f in folds] == [2, 2, 2, 2, 2]
        assert sorted(np.concatenate(folds)) == list(range(10))

    def test_uneven_split(self):
        folds = condition_folds(7, 3, seed=1)
        assert sorted(len(f) for f in folds) == [2, 2, 3]
        assert sorted(np.concatenate(folds)) == list(range(7))

    def test_deterministic(self):
        a = condition_folds(20, 4, seed=42)
        b = condition_folds(20, 4, seed=42)
        for fa, fb in zip(a, b):
            np.testing.assert_array_equal(fa, fb)

    def test_seed_changes_split(self):
        a = condition_folds(20, 4, seed=1)
        b = condition_folds(20, 4, seed=2)
        assert any(not np.array_equal(fa, fb) for fa, fb in zip(a, b))

    def test_too_many_folds(self):
        with pytest.raises(TooManyFolds):
            condition_folds(4, 5, seed=0)


class TestFoldPairMasks:
    @given(seed=st.integers(0, 5000), n=st.integers(6, 14), k=st.integers(2, 4))
    @settings(max_examples=40, deadline=None)
    def test_partition_accounting(self, seed, n, k):
        folds = condition_folds(n, k, seed)
        n_pairs = n * (n - 1) // 2
        for fold in folds:
            train_mask, test_mask = fold_pair_masks(n, fold)
            assert not np.any(train_mask & test_mask)
            t = len(fold)
            assert test_mask.sum() == t * (t - 1) // 2
            assert train_mask.sum() == (n - t) * (n - t - 1) // 2
            # everything else straddles the boundary and is dropped
            assert train_mask.sum() + test_mask.sum() <= n_pairs


class TestNnlsFit:
    def test_identity_predictor(self):
        y = np.random.default_rng(0).random(30)
        fit = nnls_fit(y[:, None], y)
        assert fit.converged
        assert fit.weights[0] == pytest.approx(1.0, abs=1e-8)

    def test_negated_predictor_pins_to_zero(self):
        y = np.random.default_rng(1).random(30)
        fit = nnls_fit(-y[:, None], y)
        assert fit.weights[0] == 0.0
        assert not np.signbit(fit.weights[0])

    def test_two_predictor_recovery(self):
        rng = np.random.default_rng(7)
        A = rng.standard_normal((40, 2))
        y = A @ np.array([0.3, 0.7])
        fit = nnls_fit(A, y)
        np.testing.assert_allclose(fit.weights, [0.3, 0.7], atol=1e-6)
        np.testing.assert_allclose(fit.weights, active_set_oracle_2var(A, y), atol=1e-6)

    @given(seed=st.integers(0, 5000))
    @settings(max_examples=40, deadline=None)
    def test_matches_active_set_oracle(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((25, 2))
        y = rng.standard_normal(25)
        fit = nnls_fit(A, y)
        np.testing.assert_allclose(fit.weights, active_set_oracle_2var(A, y), atol=1e-6)

    @given(seed=st.integers(0, 5000), k=st.integers(1, 6))
    @settings(max_examples=30, deadline=None)
    def test_matches_scipy_nnls(self, seed, k):
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((40, k))
        y = rng.standard_normal(40)
        fit = nnls_fit(A, y)
        expected, _ = scipy.optimize.nnls(A, y)
        np.testing.assert_allclose(fit.weights, expected, atol=1e-7)
        assert np.all(fit.weights >= 0.0)
        assert not np.any(np.signbit(fit.weights))

    def test_iteration_cap_warns_and_returns(self):
        rng = np.random.default_rng(3)
        base = rng.standard_normal(50)
        A = np.column_stack([base, base + 1e-9 * rng.standard_normal(50)])
        y = A @ np.array([1.0, 1.0]) + 0.01 * rng.standard_normal(50)
        cfg = WrsaConfig(nnls_max_iterations=1, nnls_tolerance=1e-14)
        with pytest.warns(NnlsConvergenceWarning):
            fit = nnls_fit(A, y, cfg)
        assert not fit.converged
        assert fit.n_sweeps == 1
        assert np.all(fit.weights >= 0.0)

    def test_shape_validation(self):
        with pytest.raises(InvalidParameter):
            nnls_fit(np.ones((2, 3)), np.ones(2))  # m < k


class TestWrsaEvaluate:
    def _predictors(self, n, seeds):
        return [(f"p{t}", random_rdm(n, seed=s)) for t, s in enumerate(seeds)]

    def test_perfect_single_predictor(self):
        pred = random_rdm(15, seed=5)
        brain = stack_of([pred, pred])
        res = wrsa_evaluate([("only", pred)], brain, WrsaConfig(n_folds=3, seed=0))
        for subj_rs in res.per_subject_per_fold_r:
            assert all(r == 1.0 for r in subj_rs)
        assert res.mean_score == 1.0
        assert res.converged

    def test_exact_two_predictor_combination(self):
        preds = self._predictors(16, seeds=(1, 2))
        combo_vals = 0.4 * preds[0][1].values + 0.6 * preds[1][1].values
        brain = stack_of([RDM(preds[0][1].condition_ids, combo_vals)] * 3)
        res = wrsa_evaluate(preds, brain, WrsaConfig(n_folds=3, seed=7))
        assert all(np.mean(rs) >= 0.999 for rs in res.per_subject_per_fold_r)
        for subj_weights in res.weights:
            for fold_w in subj_weights:
                assert fold_w[0] == pytest.approx(0.4, abs=1e-4)
                assert fold_w[1] == pytest.approx(0.6, abs=1e-4)

    def test_fold_fits_match_scipy_refit(self):
        preds = self._predictors(14, seeds=(3, 4, 5))
        brain = stack_of([random_rdm(14, seed=30)])
        cfg = WrsaConfig(n_folds=3, seed=11)
        res = wrsa_evaluate(preds, brain, cfg, model_id="m")
        pred_mat = np.column_stack([flatten_upper(r) for _, r in preds])
        y = flatten_upper(brain.rdms[0])
        from net2rdm.wrsa import fold_pair_masks as masks_fn

        for f_pos, f in enumerate(u for u in range(cfg.n_folds) if u not in res.skipped_folds):
            train_mask, test_mask = masks_fn(14, np.array(res.folds[f]))
            expected, _ = scipy.optimize.nnls(pred_mat[train_mask], y[train_mask])
            np.testing.assert_allclose(res.weights[0][f_pos], expected, atol=1e-6)

    def test_unrelated_predictor_scores_low(self):
        brain = stack_of([random_rdm(10, seed=62)])
        res = wrsa_evaluate(
            [("noise", random_rdm(10, seed=63))], brain, WrsaConfig(n_folds=3, seed=2)
        )
        assert abs(np.mean(res.per_subject_per_fold_r[0])) < 0.5

    def test_predictor_scaling_invariance(self):
        preds = self._predictors(15, seeds=(8, 9))
        brain = stack_of([random_rdm(15, seed=70), random_rdm(15, seed=71)])
        cfg = WrsaConfig(n_folds=3, seed=1)
        base = wrsa_evaluate(preds, brain, cfg)
        scaled_first = [("p0", RDM(preds[0][1].condition_ids, preds[0][1].values * 4.0)), preds[1]]
        scaled = wrsa_evaluate(scaled_first, brain, cfg)
        for sw_b, sw_s in zip(base.weights, scaled.weights):
            for fw_b, fw_s in zip(sw_b, sw_s):
                assert fw_s[0] == pytest.approx(fw_b[0] / 4.0, abs=1e-8)
                assert fw_s[1] == pytest.approx(fw_b[1], abs=1e-8)
        for rs_b, rs_s in zip(base.per_subject_per_fold_r, scaled.per_subject_per_fold_r):
            np.testing.assert_allclose(rs_b, rs_s, atol=1e-8)

    def test_deterministic_repeat(self):
        preds = self._predictors(12, seeds=(20, 21))
        brain = stack_of([random_rdm(12, seed=80), random_rdm(12, seed=81)])
        cfg = WrsaConfig(n_folds=3, seed=9)
        a = wrsa_evaluate(preds, brain, cfg)
        b = wrsa_evaluate(preds, brain, cfg)
        assert a.folds == b.folds
        assert a.weights == b.weights
        assert a.per_subject_per_fold_r == b.per_subject_per_fold_r
        assert a.mean_score == b.mean_score

    def test_small_folds_skipped_and_recorded(self):
        # 11 conditions over 5 folds: sizes 3,2,2,2,2 -> only one usable fold
        brain = stack_of([random_rdm(11, seed=90)])
        res = wrsa_evaluate(
            [("p", random_rdm(11, seed=91))], brain, WrsaConfig(n_folds=5, seed=0)
        )
        assert len(res.skipped_folds) == 4
        assert len(res.per_subject_per_fold_r[0]) == 1

    def test_all_folds_too_small(self):
        brain = stack_of([random_rdm(10, seed=95)])
        with pytest.raises(TestFoldTooSmall):
            wrsa_evaluate([("p", random_rdm(10, seed=96))], brain, WrsaConfig(n_folds=5))

    def test_too_few_conditions_for_folds(self):
        brain = stack_of([random_rdm(8, seed=97)])
        with pytest.raises(TooManyFolds):
            wrsa_evaluate([("p", random_rdm(8, seed=98))], brain, WrsaConfig(n_folds=5))

    def test_degenerate_fit_counted(self):
        # a negated predictor pins the weight at zero, so the prediction is
        # constant on every test fold
        brain_rdm = random_rdm(12, seed=99)
        anti = RDM(brain_rdm.condition_ids, -brain_rdm.values)
        res = wrsa_evaluate([("anti", anti)], stack_of([brain_rdm]), WrsaConfig(n_folds=3))
        assert res.n_degenerate_fits > 0
        assert all(r == 0.0 for r in res.per_subject_per_fold_r[0])

    def test_group_fields_present_with_multiple_subjects(self):
        preds = self._predictors(12, seeds=(31, 32))
        brain = stack_of([random_rdm(12, seed=s) for s in (101, 102, 103)])
        res = wrsa_evaluate(preds, brain, WrsaConfig(n_folds=3, seed=4))
        assert res.sem is not None and res.p_value is not None
        assert res.noise_ceiling is not None
        assert 0.0 < res.p_value <= 1.0
