"""Classical RSA: layer-vs-brain scoring, noise ceilings, model comparison.

Per-subject scores are the signed square of Spearman rank correlations
between RDM upper triangles. Significance is a sign-flip permutation test on
the per-subject scores; FDR flags are assigned jointly over all layers that
enter one call (one report, one correction).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .core import (
    RDM,
    EvaluationResult,
    NoiseCeiling,
    SubjectRDMStack,
    align_conditions,
    signed_square,
)
from .errors import EmptyInput, InvalidParameter, SubjectMismatch, TooFewSubjects
from .rdm import average_rdms, flatten_upper
from .stats import (
    PermutationScheme,
    default_scheme,
    fdr_bh,
    paired_difference_test,
    sem,
    sign_flip_test,
    spearman,
)

__all__ = [
    "RsaConfig",
    "rsa_evaluate",
    "evaluate_models",
    "noise_ceiling",
    "compare_models",
]


@dataclass(frozen=True)
class RsaConfig:
    """Evaluation knobs: FDR level and the permutation scheme.

    permutation None means: exact enumeration up to 12 subjects, Monte-Carlo
    with 10,000 samples beyond that.
    """

    fdr_q: float = 0.05
    permutation: Optional[PermutationScheme] = None

    def __post_init__(self):
        if not 0.0 < self.fdr_q < 1.0:
            raise InvalidParameter(f"fdr_q must lie in (0, 1), got {self.fdr_q!r}")


def noise_ceiling(brain: SubjectRDMStack) -> NoiseCeiling:
    """Lower/upper bounds on attainable group scores.

    lower_s correlates each subject with the mean RDM of the other
    subjects, upper_s with the mean including the subject itself. Both are
    averaged over subjects first and signed-squared after, matching the
    score scale. The lower bound is clamped to never exceed the upper.
    """
    if brain.n_subjects < 2:
        raise TooFewSubjects(
            f"noise ceiling needs >= 2 subjects, got {brain.n_subjects}"
        )
    flats = [flatten_upper(r) for r in brain.rdms]
    grand_flat = flatten_upper(average_rdms(brain.rdms))
    lower_rs, upper_rs = [], []
    for s in range(brain.n_subjects):
        others = [r for t, r in enumerate(brain.rdms) if t != s]
        lower_rs.append(spearman(flats[s], flatten_upper(average_rdms(others))))
        upper_rs.append(spearman(flats[s], grand_flat))
    lower = signed_square(float(np.mean(lower_rs)))
    upper = signed_square(float(np.mean(upper_rs)))
    return NoiseCeiling(lower=min(lower, upper), upper=upper)


def _layer_results(
    model_rdms: Sequence[tuple[str, RDM]],
    brain: SubjectRDMStack,
    config: RsaConfig,
    model_id: str,
) -> list[EvaluationResult]:
    """Score layers without FDR flags (all significant=False)."""
    model_rdms = tuple(model_rdms)
    if not model_rdms:
        raise EmptyInput("no model RDMs to evaluate")
    n = brain.n_subjects
    ceiling = noise_ceiling(brain) if n >= 2 else None
    scheme = config.permutation if config.permutation is not None else default_scheme(n)
    results = []
    for layer_name, rdm in model_rdms:
        model_al, brain_al = align_conditions(rdm, brain)
        mvec = flatten_upper(model_al)
        rhos = tuple(spearman(mvec, flatten_upper(r)) for r in brain_al.rdms)
        scores = tuple(signed_square(r) for r in rhos)
        results.append(
            EvaluationResult(
                model_id=model_id,
                layer_name=layer_name,
                roi_name=brain.roi_name,
                subjects=brain.subjects,
                per_subject_rho=rhos,
                per_subject_score=scores,
                mean_score=float(np.mean(scores)),
                sem=sem(scores) if n >= 2 else None,
                p_value=sign_flip_test(scores, "greater", scheme) if n >= 2 else None,
                significant=False,
                noise_ceiling=ceiling,
            )
        )
    return results


def _apply_fdr(results: list[EvaluationResult], q: float) -> list[EvaluationResult]:
    with_p = [i for i, r in enumerate(results) if r.p_value is not None]
    if not with_p:
        return results
    mask = fdr_bh([results[i].p_value for i in with_p], q)
    out = list(results)
    for flag, i in zip(mask, with_p):
        out[i] = replace(results[i], significant=bool(flag))
    return out


def rsa_evaluate(
    model_rdms: Sequence[tuple[str, RDM]],
    brain: SubjectRDMStack,
    config: RsaConfig | None = None,
    model_id: str = "model",
) -> list[EvaluationResult]:
    """Score each layer RDM against every subject, with joint FDR.

    Returns one EvaluationResult per layer, in input order. sem and
    p_value are absent for single-subject stacks; significance flags come
    from Benjamini-Hochberg over all layers of this call.
    """
    config = config or RsaConfig()
    return _apply_fdr(_layer_results(model_rdms, brain, config, model_id), config.fdr_q)


def evaluate_models(
    models: Sequence[tuple[str, Sequence[tuple[str, RDM]]]],
    brain: SubjectRDMStack,
    config: RsaConfig | None = None,
) -> list[EvaluationResult]:
    """Evaluate several models; FDR corrects across all their layers at once."""
    config = config or RsaConfig()
    results: list[EvaluationResult] = []
    for model_id, layers in models:
        results.extend(_layer_results(layers, brain, config, model_id))
    return _apply_fdr(results, config.fdr_q)


def compare_models(
    result_a: EvaluationResult,
    result_b: EvaluationResult,
    scheme: PermutationScheme | None = None,
) -> float:
    """Two-sided paired sign-flip p-value on per-subject score differences."""
    if result_a.roi_name != result_b.roi_name:
        raise SubjectMismatch(
            f"results come from different ROIs: {result_a.roi_name!r} vs {result_b.roi_name!r}"
        )
    if result_a.subjects != result_b.subjects:
        raise SubjectMismatch("results cover different subjects or a different order")
    if scheme is None:
        scheme = default_scheme(result_a.n_subjects)
    return paired_difference_test(
        result_a.per_subject_score, result_b.per_subject_score, scheme
    )
