"""Weighted RSA: non-negative reweighting of predictor RDMs under CV.

The regression runs on dissimilarities, one observation per condition pair.
Cross-validation splits conditions (not pairs) into folds; pairs straddling
the train/test boundary are discarded so no condition leaks across it. The
NNLS solver is projected coordinate descent with a KKT stopping rule; it
needs no factorizations, which keeps it bit-deterministic.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import RDM, NoiseCeiling, SubjectRDMStack, signed_square
from .errors import (
    AllTied,
    ConstantInput,
    EmptyInput,
    InsufficientOverlap,
    InvalidParameter,
    NnlsConvergenceWarning,
    NonFiniteValue,
    TestFoldTooSmall,
    TooManyFolds,
)
from .rdm import flatten_upper
from .rsa import noise_ceiling
from .stats import default_scheme, pearson, sem, sign_flip_test

__all__ = [
    "WrsaConfig",
    "NnlsFit",
    "WrsaResult",
    "condition_folds",
    "fold_pair_masks",
    "nnls_fit",
    "wrsa_evaluate",
]


@dataclass(frozen=True)
class WrsaConfig:
    n_folds: int = 5
    seed: int = 0
    nnls_tolerance: float = 1e-10
    nnls_max_iterations: int = 10_000

    def __post_init__(self):
        if self.n_folds < 2:
            raise InvalidParameter(f"n_folds must be >= 2, got {self.n_folds}")
        if not self.nnls_tolerance > 0.0:
            raise InvalidParameter("nnls_tolerance must be positive")
        if self.nnls_max_iterations < 1:
            raise InvalidParameter("nnls_max_iterations must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidParameter("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class NnlsFit:
    """Solution of one non-negative least-squares problem."""

    weights: np.ndarray
    converged: bool
    n_sweeps: int
    kkt_violation: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def condition_folds(n_conditions: int, n_folds: int, seed: int) -> list[np.ndarray]:
    """Seeded disjoint condition index sets with sizes differing by <= 1."""
    if n_folds > n_conditions:
        raise TooManyFolds(
            f"cannot split {n_conditions} conditions into {n_folds} folds"
        )
    if n_folds < 2:
        raise InvalidParameter(f"n_folds must be >= 2, got {n_folds}")
    perm = np.random.default_rng(seed).permutation(n_conditions)
    return [np.sort(fold) for fold in np.array_split(perm, n_folds)]


def fold_pair_masks(n_conditions: int, test_conditions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Boolean masks over upper-triangle pairs: fully-train and fully-test.

    Pairs with one condition on each side of the split match neither mask.
    """
    iu0, iu1 = np.triu_indices(n_conditions, k=1)
    in_test = np.zeros(n_conditions, dtype=bool)
    in_test[np.asarray(test_conditions, dtype=np.intp)] = True
    test_mask = in_test[iu0] & in_test[iu1]
    train_mask = ~in_test[iu0] & ~in_test[iu1]
    return train_mask, test_mask


def nnls_fit(predictors: np.ndarray, target: np.ndarray, config: WrsaConfig | None = None) -> NnlsFit:
    """Minimize ||predictors @ w - target||^2 subject to w >= 0.

    Projected coordinate descent on the normal equations. Convergence is
    declared when the largest KKT violation (|gradient| on active
    coordinates, negative gradient magnitude on zero coordinates) drops to
    config.nnls_tolerance. Hitting the iteration cap returns the last
    iterate (objective decreases monotonically, so it is the best one) and
    warns instead of raising.
    """
    config = config or WrsaConfig()
    A = np.asarray(predictors, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    if A.ndim != 2:
        raise InvalidParameter(f"predictors must be 2-d, got shape {A.shape}")
    m, k = A.shape
    if y.shape != (m,):
        raise InvalidParameter(f"target shape {y.shape} does not match {m} rows")
    if m < k or k < 1:
        raise InvalidParameter(f"need m >= k >= 1, got m={m}, k={k}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(y))):
        raise NonFiniteValue("nnls inputs must be finite")

    G = A.T @ A
    h = A.T @ y
    diag = np.diag(G).copy()
    w = np.zeros(k, dtype=np.float64)
    kkt = np.inf
    sweeps = 0
    for sweeps in range(1, config.nnls_max_iterations + 1):
        for i in range(k):
            if diag[i] == 0.0:  # all-zero predictor column can carry no weight
                continue
            cand = w[i] - (float(G[i] @ w) - h[i]) / diag[i]
            w[i] = cand if cand > 0.0 else 0.0
        grad = G @ w - h
        active = w > 0.0
        kkt = 0.0
        if np.any(active):
            kkt = float(np.max(np.abs(grad[active])))
        if np.any(~active):
            kkt = max(kkt, float(np.max(np.maximum(0.0, -grad[~active]))))
        if kkt <= config.nnls_tolerance:
            return NnlsFit(weights=w, converged=True, n_sweeps=sweeps, kkt_violation=kkt)
    warnings.warn(
        f"nnls stopped at {config.nnls_max_iterations} sweeps with KKT violation {kkt:.3e}",
        NnlsConvergenceWarning,
    )
    return NnlsFit(weights=w, converged=False, n_sweeps=sweeps, kkt_violation=kkt)


@dataclass(frozen=True)
class WrsaResult:
    """Cross-validated weighted-RSA outcome for one predictor set."""

    model_id: str
    roi_name: str
    predictor_names: tuple[str, ...]
    subjects: tuple[str, ...]
    folds: tuple[tuple[int, ...], ...]
    skipped_folds: tuple[int, ...]
    weights: tuple[tuple[tuple[float, ...], ...], ...]  # [subject][fold][predictor]
    per_subject_per_fold_r: tuple[tuple[float, ...], ...]  # [subject][used fold]
    per_subject_score: tuple[float, ...]
    mean_score: float
    sem: Optional[float]
    p_value: Optional[float]
    significant: bool
    converged: bool
    n_degenerate_fits: int
    noise_ceiling: Optional[NoiseCeiling] = field(default=None)

    @property
    def n_subjects(self) -> int:
        return len(self.subjects)


def _align_all(model_rdms, brain):
    """Common sorted condition set across every predictor and the brain."""
    id_sets = [set(r.condition_ids) for _, r in model_rdms]
    id_sets.append(set(brain.condition_ids))
    shared = sorted(set.intersection(*id_sets))
    if len(shared) < 3:
        raise InsufficientOverlap(
            f"only {len(shared)} condition(s) shared by all inputs; need >= 3"
        )
    shared = tuple(shared)

    def reindex(rdm):
        if rdm.condition_ids == shared:
            return rdm
        pos = {c: i for i, c in enumerate(rdm.condition_ids)}
        idx = np.array([pos[c] for c in shared], dtype=np.intp)
        return RDM(condition_ids=shared, values=rdm.values[np.ix_(idx, idx)])

    predictors = [(name, reindex(r)) for name, r in model_rdms]
    if brain.condition_ids == shared:
        brain_out = brain
    else:
        brain_out = SubjectRDMStack(
            roi_name=brain.roi_name,
            subjects=brain.subjects,
            rdms=tuple(reindex(r) for r in brain.rdms),
        )
    return predictors, brain_out


def wrsa_evaluate(
    model_rdms: Sequence[tuple[str, RDM]],
    brain: SubjectRDMStack,
    config: WrsaConfig | None = None,
    model_id: str = "wrsa",
) -> WrsaResult:
    """Fit per-subject, per-fold NNLS weights and score held-out prediction.

    For each fold, training observations are upper-triangle pairs entirely
    outside the test conditions, test observations pairs entirely inside;
    straddling pairs are unused. A test fold with fewer than 3 conditions
    (< 3 pairs) is skipped for every subject; if all folds are skipped the
    call fails. A degenerate fit whose prediction is constant on the test
    pairs contributes r = 0 and is counted in n_degenerate_fits.
    """
    config = config or WrsaConfig()
    model_rdms = tuple(model_rdms)
    if not model_rdms:
        raise EmptyInput("no predictor RDMs")
    predictors, brain_al = _align_all(model_rdms, brain)
    n_cond = len(brain_al.condition_ids)
    if n_cond < 2 * config.n_folds:
        raise TooManyFolds(
            f"{n_cond} conditions cannot support {config.n_folds} folds "
            f"(need >= {2 * config.n_folds})"
        )
    folds = condition_folds(n_cond, config.n_folds, config.seed)
    pred_mat = np.column_stack([flatten_upper(r) for _, r in predictors])
    subj_vecs = [flatten_upper(r) for r in brain_al.rdms]

    usable, skipped = [], []
    for f, fold in enumerate(folds):
        (skipped if fold.size < 3 else usable).append(f)
    if not usable:
        raise TestFoldTooSmall(
            f"every fold has < 3 conditions with n_folds={config.n_folds}, n={n_cond}"
        )

    masks = {f: fold_pair_masks(n_cond, folds[f]) for f in usable}
    all_weights, all_rs, scores = [], [], []
    converged_all = True
    degenerate = 0
    for y in subj_vecs:
        subj_weights, subj_rs = [], []
        for f in usable:
            train_mask, test_mask = masks[f]
            fit = nnls_fit(pred_mat[train_mask], y[train_mask], config)
            converged_all &= fit.converged
            predicted = pred_mat[test_mask] @ fit.weights
            try:
                r = pearson(predicted, y[test_mask])
            except (ConstantInput, AllTied):
                r = 0.0
                degenerate += 1
            subj_weights.append(tuple(float(v) for v in fit.weights))
            subj_rs.append(float(r))
        all_weights.append(tuple(subj_weights))
        all_rs.append(tuple(subj_rs))
        scores.append(signed_square(float(np.mean(subj_rs))))

    n = brain_al.n_subjects
    scheme = default_scheme(n, config.seed)
    return WrsaResult(
        model_id=model_id,
        roi_name=brain_al.roi_name,
        predictor_names=tuple(name for name, _ in predictors),
        subjects=brain_al.subjects,
        folds=tuple(tuple(int(i) for i in fold) for fold in folds),
        skipped_folds=tuple(skipped),
        weights=tuple(all_weights),
        per_subject_per_fold_r=tuple(all_rs),
        per_subject_score=tuple(scores),
        mean_score=float(np.mean(scores)),
        sem=sem(scores) if n >= 2 else None,
        p_value=sign_flip_test(scores, "greater", scheme) if n >= 2 else None,
        significant=False,
        converged=converged_all,
        n_degenerate_fits=degenerate,
        noise_ceiling=noise_ceiling(brain_al) if n >= 2 else None,
    )
