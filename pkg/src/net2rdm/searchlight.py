"""Whole-volume searchlight RSA over millimeter voxel coordinates.

Sphere lookup hashes voxels into a uniform grid with cell size equal to the
radius, so each center only inspects its 27 neighboring cells. The distance
predicate is written as (dx*dx + dy*dy) + dz*dz <= radius**2 with fixed
evaluation order; any oracle using the same expression agrees bit-for-bit.

Centers are embarrassingly parallel: workers receive statically chunked
index ranges and write into disjoint slots of preallocated output arrays,
which makes the map bit-identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import RDM, VoxelDataset
from .errors import (
    AllCentersInvalid,
    AllTied,
    ConstantInput,
    ConstantRow,
    InsufficientOverlap,
    InvalidParameter,
    ZeroNormRow,
)
from .rdm import METRICS, compute_rdm, flatten_upper
from .stats import spearman

__all__ = ["SearchlightConfig", "SearchlightMap", "build_spheres", "searchlight_rsa"]

INVALID = np.nan


@dataclass(frozen=True)
class SearchlightConfig:
    radius_mm: float = 10.0
    min_voxels: int = 5
    metric: str = "correlation"

    def __post_init__(self):
        if not self.radius_mm > 0.0:
            raise InvalidParameter(f"radius_mm must be > 0, got {self.radius_mm!r}")
        if self.min_voxels < 2:
            raise InvalidParameter(f"min_voxels must be >= 2, got {self.min_voxels}")
        if self.metric not in METRICS:
            raise InvalidParameter(f"unknown metric {self.metric!r}; choose one of {METRICS}")


@dataclass(frozen=True)
class SearchlightMap:
    """Per-voxel signed-square Spearman scores; NaN marks invalid centers."""

    subjects: tuple[str, ...]
    per_subject_scores: np.ndarray  # [n_subjects x n_voxels], NaN at invalid centers
    mean_scores: np.ndarray  # [n_voxels], NaN at invalid centers
    n_voxels_per_sphere: np.ndarray  # [n_voxels] int

    def __post_init__(self):
        for name in ("per_subject_scores", "mean_scores", "n_voxels_per_sphere"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def valid(self) -> np.ndarray:
        return ~np.isnan(self.mean_scores)

    @property
    def n_voxels(self) -> int:
        return self.mean_scores.shape[0]


def build_spheres(coordinates: np.ndarray, radius_mm: float) -> list[np.ndarray]:
    """Voxel index sets within radius_mm of each center, sorted by index."""
    coords = np.asarray(coordinates, dtype=np.float64)
    n = coords.shape[0]
    cells = np.floor(coords / radius_mm).astype(np.int64)
    buckets: dict[tuple[int, int, int], list[int]] = {}
    for v in range(n):
        buckets.setdefault(tuple(cells[v]), []).append(v)

    r2 = radius_mm * radius_mm
    offsets = [
        (dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)
    ]
    spheres = []
    for c in range(n):
        cx, cy, cz = cells[c]
        candidates = []
        for dx, dy, dz in offsets:
            candidates.extend(buckets.get((cx + dx, cy + dy, cz + dz), ()))
        cand = np.sort(np.asarray(candidates, dtype=np.intp))
        dx = coords[cand, 0] - coords[c, 0]
        dy = coords[cand, 1] - coords[c, 1]
        dz = coords[cand, 2] - coords[c, 2]
        d2 = (dx * dx + dy * dy) + dz * dz
        spheres.append(cand[d2 <= r2])
    return spheres


def _align_model_to_voxels(model_rdm: RDM, data: VoxelDataset):
    """Common sorted condition order for the model RDM and voxel responses."""
    if model_rdm.condition_ids == data.condition_ids:
        return model_rdm, data
    shared = sorted(set(model_rdm.condition_ids) & set(data.condition_ids))
    if len(shared) < 3:
        raise InsufficientOverlap(
            f"only {len(shared)} shared condition(s) between model RDM and voxel data"
        )
    shared = tuple(shared)
    mpos = {c: i for i, c in enumerate(model_rdm.condition_ids)}
    midx = np.array([mpos[c] for c in shared], dtype=np.intp)
    model_out = RDM(condition_ids=shared, values=model_rdm.values[np.ix_(midx, midx)])
    dpos = {c: i for i, c in enumerate(data.condition_ids)}
    didx = np.array([dpos[c] for c in shared], dtype=np.intp)
    data_out = VoxelDataset(
        subjects=data.subjects,
        responses=tuple(resp[didx] for resp in data.responses),
        coordinates=data.coordinates,
        condition_ids=shared,
    )
    return model_out, data_out


def _score_centers(
    centers: np.ndarray,
    spheres: list[np.ndarray],
    data: VoxelDataset,
    model_vec: np.ndarray,
    cond_ids: tuple[str, ...],
    config: SearchlightConfig,
    out_scores: np.ndarray,
) -> None:
    """Fill out_scores[:, c] for each center in the assigned chunk."""
    for c in centers:
        sphere = spheres[c]
        if sphere.size < config.min_voxels:
            continue  # stays NaN
        col = np.empty(len(data.subjects), dtype=np.float64)
        try:
            for s, resp in enumerate(data.responses):
                local = compute_rdm(resp[:, sphere], cond_ids, metric=config.metric)
                rho = spearman(model_vec, flatten_upper(local))
                col[s] = rho * abs(rho)
        except (ConstantRow, ZeroNormRow, AllTied, ConstantInput):
            continue  # metric precondition failed: center invalid for everyone
        out_scores[:, c] = col


def searchlight_rsa(
    data: VoxelDataset,
    model_rdm: RDM,
    config: SearchlightConfig | None = None,
    n_workers: int = 1,
) -> SearchlightMap:
    """Score every voxel-centered sphere against a model RDM.

    Centers whose sphere has fewer than config.min_voxels members, or where
    any subject's local pattern violates the metric precondition, are NaN
    for all subjects. Raises AllCentersInvalid when nothing survives.
    """
    config = config or SearchlightConfig()
    if n_workers < 1:
        raise InvalidParameter(f"n_workers must be >= 1, got {n_workers}")
    model_al, data_al = _align_model_to_voxels(model_rdm, data)
    model_vec = flatten_upper(model_al)
    spheres = build_spheres(data_al.coordinates, config.radius_mm)
    n_vox = data_al.n_voxels
    n_sub = data_al.n_subjects

    scores = np.full((n_sub, n_vox), INVALID, dtype=np.float64)
    chunks = [c for c in np.array_split(np.arange(n_vox), n_workers) if c.size]
    if len(chunks) <= 1:
        for chunk in chunks:
            _score_centers(chunk, spheres, data_al, model_vec, data_al.condition_ids, config, scores)
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            futures = [
                pool.submit(
                    _score_centers,
                    chunk,
                    spheres,
                    data_al,
                    model_vec,
                    data_al.condition_ids,
                    config,
                    scores,
                )
                for chunk in chunks
            ]
            for fut in futures:
                fut.result()

    valid = ~np.isnan(scores[0])
    if not np.any(valid):
        raise AllCentersInvalid(
            "no searchlight center passed the size and metric requirements"
        )
    mean_scores = np.full(n_vox, INVALID, dtype=np.float64)
    mean_scores[valid] = scores[:, valid].mean(axis=0)
    sizes = np.array([s.size for s in spheres], dtype=np.int64)
    return SearchlightMap(
        subjects=data_al.subjects,
        per_subject_scores=scores,
        mean_scores=mean_scores,
        n_voxels_per_sphere=sizes,
    )
