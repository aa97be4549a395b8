"""Shared domain types: activation sets, RDMs, subject stacks, voxel data.

All types are immutable after construction (frozen dataclasses holding
read-only arrays) and validate their invariants eagerly. Validation rejects
bad data instead of repairing it; downstream rank statistics are only safe
on inputs that passed these checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ConditionMismatch,
    DuplicateConditionId,
    DuplicateLayerName,
    InsufficientOverlap,
    MismatchedStimulusCount,
    NonFiniteValue,
)

__all__ = [
    "ActivationSet",
    "RDM",
    "SubjectRDMStack",
    "VoxelDataset",
    "NoiseCeiling",
    "EvaluationResult",
    "validate_activation_set",
    "align_conditions",
]


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype, order="C")
    arr.setflags(write=False)
    return arr


def _check_finite(arr: np.ndarray, context: str) -> None:
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        pos = ", ".join(f"{'row col plane'.split()[i]} {v}" for i, v in enumerate(bad))
        raise NonFiniteValue(f"{context}: non-finite value at {pos}")


@dataclass(frozen=True)
class ActivationSet:
    """Per-layer stimulus x feature activation matrices for one network."""

    network_id: str
    layers: tuple[tuple[str, np.ndarray], ...]
    stimulus_ids: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "stimulus_ids", tuple(self.stimulus_ids))
        names = [name for name, _ in self.layers]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise DuplicateLayerName(f"duplicate layer name(s): {sorted(dupes)}")
        if len(set(self.stimulus_ids)) != len(self.stimulus_ids):
            raise DuplicateConditionId("stimulus ids must be unique")
        n = len(self.stimulus_ids)
        frozen = []
        for name, matrix in self.layers:
            mat = np.asarray(matrix, dtype=np.float64)
            if mat.ndim != 2 or mat.shape[1] < 1:
                raise MismatchedStimulusCount(
                    f"layer {name!r}: expected a 2-d [n_stimuli x n_features] matrix, got shape {mat.shape}"
                )
            if mat.shape[0] != n:
                raise MismatchedStimulusCount(
                    f"layer {name!r}: {mat.shape[0]} rows but {n} stimulus ids"
                )
            _check_finite(mat, f"layer {name!r}")
            frozen.append((name, _frozen_array(mat)))
        object.__setattr__(self, "layers", tuple(frozen))

    @property
    def n_stimuli(self) -> int:
        return len(self.stimulus_ids)

    def layer_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.layers)


def validate_activation_set(
    network_id: str,
    layers: Sequence[tuple[str, np.ndarray]],
    stimulus_ids: Sequence[str],
) -> ActivationSet:
    """Check raw activation data and return an ActivationSet, or raise.

    Never repairs data: any mismatch, duplicate name, or non-finite value is
    an error naming the offending layer (and row/column where applicable).
    """
    return ActivationSet(network_id=network_id, layers=tuple(layers), stimulus_ids=tuple(stimulus_ids))


@dataclass(frozen=True)
class RDM:
    """Square symmetric dissimilarity matrix over named conditions.

    Invariants (checked on construction): symmetric exactly as stored, zero
    diagonal, all entries finite, at least 3 conditions.
    """

    condition_ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "condition_ids", tuple(self.condition_ids))
        vals = np.asarray(self.values, dtype=np.float64)
        n = len(self.condition_ids)
        if len(set(self.condition_ids)) != n:
            raise DuplicateConditionId("condition ids must be unique")
        if n < 3:
            raise ConditionMismatch(f"an RDM needs >= 3 conditions, got {n}")
        if vals.shape != (n, n):
            raise ConditionMismatch(f"values shape {vals.shape} does not match {n} condition ids")
        _check_finite(vals, "RDM values")
        if not (vals == vals.T).all():
            i, j = np.argwhere(vals != vals.T)[0]
            raise ConditionMismatch(
                f"RDM not symmetric: values[{i}][{j}]={vals[i, j]!r} != values[{j}][{i}]={vals[j, i]!r}"
            )
        if np.any(np.diag(vals) != 0.0):
            i = int(np.flatnonzero(np.diag(vals) != 0.0)[0])
            raise ConditionMismatch(f"RDM diagonal must be zero, got {vals[i, i]!r} at [{i}][{i}]")
        object.__setattr__(self, "values", _frozen_array(vals))

    @property
    def n_conditions(self) -> int:
        return len(self.condition_ids)


@dataclass(frozen=True)
class SubjectRDMStack:
    """Per-subject brain RDMs for one ROI, all over the same condition set."""

    roi_name: str
    subjects: tuple[str, ...]
    rdms: tuple[RDM, ...]

    def __post_init__(self):
        object.__setattr__(self, "subjects", tuple(self.subjects))
        object.__setattr__(self, "rdms", tuple(self.rdms))
        if len(self.subjects) < 1:
            raise ConditionMismatch("a subject stack needs at least one subject")
        if len(self.subjects) != len(self.rdms):
            raise ConditionMismatch(
                f"{len(self.subjects)} subject ids but {len(self.rdms)} RDMs"
            )
        ref = self.rdms[0].condition_ids
        for sid, rdm in zip(self.subjects, self.rdms):
            if rdm.condition_ids != ref:
                raise ConditionMismatch(
                    f"subject {sid!r}: condition ids differ from subject {self.subjects[0]!r}"
                )

    @property
    def n_subjects(self) -> int:
        return len(self.subjects)

    @property
    def condition_ids(self) -> tuple[str, ...]:
        return self.rdms[0].condition_ids


@dataclass(frozen=True)
class VoxelDataset:
    """Per-subject condition x voxel responses plus voxel mm coordinates."""

    subjects: tuple[str, ...]
    responses: tuple[np.ndarray, ...]
    coordinates: np.ndarray
    condition_ids: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "subjects", tuple(self.subjects))
        object.__setattr__(self, "condition_ids", tuple(self.condition_ids))
        if len(self.subjects) < 1:
            raise ConditionMismatch("a voxel dataset needs at least one subject")
        if len(self.subjects) != len(self.responses):
            raise ConditionMismatch(
                f"{len(self.subjects)} subject ids but {len(self.responses)} response matrices"
            )
        if len(set(self.condition_ids)) != len(self.condition_ids):
            raise DuplicateConditionId("condition ids must be unique")
        coords = np.asarray(self.coordinates, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 3:
            raise ConditionMismatch(f"coordinates must be [n_voxels x 3], got {coords.shape}")
        _check_finite(coords, "coordinates")
        n_vox = coords.shape[0]
        if np.unique(coords, axis=0).shape[0] != n_vox:
            raise ConditionMismatch("coordinate rows must be unique")
        n_cond = len(self.condition_ids)
        frozen = []
        for sid, resp in zip(self.subjects, self.responses):
            mat = np.asarray(resp, dtype=np.float64)
            if mat.shape != (n_cond, n_vox):
                raise ConditionMismatch(
                    f"subject {sid!r}: responses shape {mat.shape}, expected ({n_cond}, {n_vox})"
                )
            _check_finite(mat, f"subject {sid!r} responses")
            frozen.append(_frozen_array(mat))
        object.__setattr__(self, "responses", tuple(frozen))
        object.__setattr__(self, "coordinates", _frozen_array(coords))

    @property
    def n_subjects(self) -> int:
        return len(self.subjects)

    @property
    def n_voxels(self) -> int:
        return self.coordinates.shape[0]

    @property
    def n_conditions(self) -> int:
        return len(self.condition_ids)


@dataclass(frozen=True)
class NoiseCeiling:
    """Lower/upper bound on the best attainable score, signed-square scale."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (self.lower <= self.upper):
            raise ConditionMismatch(
                f"noise ceiling lower {self.lower!r} exceeds upper {self.upper!r}"
            )


def signed_square(x: float) -> float:
    """sign(x) * x**2, the squared effect size that keeps the sign."""
    return float(x) * abs(float(x))


@dataclass(frozen=True)
class EvaluationResult:
    """Per-layer RSA outcome: subject-level correlations plus group stats.

    ``per_subject_score`` is the signed square of the subject's rank
    correlation; ``mean_score`` averages those. ``sem`` and ``p_value`` are
    absent (None) for single-subject data; ``significant`` is the post-FDR
    flag for the report the result was computed in.
    """

    model_id: str
    layer_name: str
    roi_name: str
    subjects: tuple[str, ...]
    per_subject_rho: tuple[float, ...]
    per_subject_score: tuple[float, ...]
    mean_score: float
    sem: Optional[float]
    p_value: Optional[float]
    significant: bool
    noise_ceiling: Optional[NoiseCeiling] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "subjects", tuple(self.subjects))
        object.__setattr__(self, "per_subject_rho", tuple(float(r) for r in self.per_subject_rho))
        object.__setattr__(self, "per_subject_score", tuple(float(s) for s in self.per_subject_score))
        rhos, scores = self.per_subject_rho, self.per_subject_score
        if len(rhos) != len(scores) or len(rhos) < 1:
            raise ConditionMismatch("per-subject rho/score lists must be non-empty and equal length")
        if len(self.subjects) != len(rhos):
            raise ConditionMismatch(
                f"{len(self.subjects)} subject ids but {len(rhos)} per-subject values"
            )
        for s, (rho, score) in enumerate(zip(rhos, scores)):
            if not -1.0 <= rho <= 1.0:
                raise ConditionMismatch(f"subject {s}: rho {rho!r} outside [-1, 1]")
            if score != signed_square(rho):
                raise ConditionMismatch(
                    f"subject {s}: score {score!r} is not the signed square of rho {rho!r}"
                )
        if self.mean_score != float(np.mean(scores)):
            raise ConditionMismatch(
                f"mean_score {self.mean_score!r} is not the mean of per-subject scores"
            )
        if self.sem is not None and not self.sem >= 0.0:
            raise ConditionMismatch(f"sem must be >= 0, got {self.sem!r}")
        if self.p_value is not None and not 0.0 < self.p_value <= 1.0:
            raise ConditionMismatch(f"p_value must lie in (0, 1], got {self.p_value!r}")

    @property
    def n_subjects(self) -> int:
        return len(self.per_subject_rho)


def _intersection_indices(
    ids_a: Sequence[str], ids_b: Sequence[str]
) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    """Sorted intersection of two id lists plus the index of each id in a and b."""
    shared = sorted(set(ids_a) & set(ids_b))
    if len(shared) < 3:
        raise InsufficientOverlap(
            f"only {len(shared)} shared condition(s); need at least 3 for rank comparison"
        )
    pos_a = {c: i for i, c in enumerate(ids_a)}
    pos_b = {c: i for i, c in enumerate(ids_b)}
    idx_a = np.array([pos_a[c] for c in shared], dtype=np.intp)
    idx_b = np.array([pos_b[c] for c in shared], dtype=np.intp)
    return tuple(shared), idx_a, idx_b


def _reindex_rdm(rdm: RDM, ids: tuple[str, ...], idx: np.ndarray) -> RDM:
    return RDM(condition_ids=ids, values=rdm.values[np.ix_(idx, idx)])


def align_conditions(model_rdm: RDM, brain: SubjectRDMStack) -> tuple[RDM, SubjectRDMStack]:
    """Restrict both inputs to their shared conditions, in sorted id order.

    If the two id lists already match exactly (content and order) the inputs
    are returned unchanged; otherwise both are reordered to the
    lexicographically sorted intersection, so the result is independent of
    argument order. Raises InsufficientOverlap below 3 shared conditions.
    """
    if model_rdm.condition_ids == brain.condition_ids:
        return model_rdm, brain
    shared, idx_m, idx_b = _intersection_indices(model_rdm.condition_ids, brain.condition_ids)
    model_out = _reindex_rdm(model_rdm, shared, idx_m)
    brain_out = SubjectRDMStack(
        roi_name=brain.roi_name,
        subjects=brain.subjects,
        rdms=tuple(_reindex_rdm(r, shared, idx_b) for r in brain.rdms),
    )
    return model_out, brain_out
