"""Shared builders for synthetic RDMs, subject stacks, and voxel volumes."""

import numpy as np

from net2rdm.core import RDM, SubjectRDMStack, VoxelDataset
from net2rdm.rdm import compute_rdm

_acceptance_outcomes = {}


def pytest_runtest_logreport(report):
    """Collect acceptance-suite outcomes for the end-of-run summary."""
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if report.when == "call":
        _acceptance_outcomes[name] = report.outcome
    elif report.failed:  # setup/teardown crash
        _acceptance_outcomes.setdefault(name, "failed")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance_outcomes.items():
        label = name.removeprefix("test_").replace("_", " ")
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {label}")


def symmetrize(values):
    """Zero-diagonal symmetric matrix from an arbitrary square array."""
    values = np.asarray(values, dtype=np.float64)
    out = np.triu(values, k=1)
    out = out + out.T
    np.fill_diagonal(out, 0.0)
    return out


def random_rdm(n, seed=0, ids=None):
    rng = np.random.default_rng(seed)
    vals = symmetrize(rng.random((n, n)) + 0.05)
    if ids is None:
        ids = tuple(f"c{i:02d}" for i in range(n))
    return RDM(condition_ids=tuple(ids), values=vals)


def noisy_copy(rdm, seed, sigma):
    """New RDM whose upper triangle is the source plus N(0, sigma) noise."""
    rng = np.random.default_rng(seed)
    vals = symmetrize(rdm.values + rng.normal(0.0, sigma, rdm.values.shape))
    return RDM(condition_ids=rdm.condition_ids, values=vals)


def stack_of(rdms, roi="ROI", subjects=None):
    rdms = tuple(rdms)
    if subjects is None:
        subjects = tuple(f"sub{i+1:02d}" for i in range(len(rdms)))
    return SubjectRDMStack(roi_name=roi, subjects=tuple(subjects), rdms=rdms)


def cube_grid(side, spacing=1.0):
    """Coordinates of a side^3 lattice, row-major order."""
    axis = np.arange(side, dtype=np.float64) * spacing
    grid = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1)
    return grid.reshape(-1, 3)


def planted_dataset(seed, side=6, n_cond=8, n_subjects=2, noise=0.1):
    """Volume whose low-corner 3x3x3 block encodes a planted pattern."""
    rng = np.random.default_rng(seed)
    coords = cube_grid(side)
    planted_mask = (coords <= 2.0).all(axis=1)
    planted_idx = np.flatnonzero(planted_mask)
    pattern = rng.standard_normal((n_cond, planted_idx.size))
    responses = []
    for _ in range(n_subjects):
        resp = rng.standard_normal((n_cond, len(coords)))
        resp[:, planted_idx] = pattern + noise * rng.standard_normal(pattern.shape)
        responses.append(resp)
    ids = tuple(f"c{i}" for i in range(n_cond))
    data = VoxelDataset(
        subjects=tuple(f"s{i+1}" for i in range(n_subjects)),
        responses=tuple(responses),
        coordinates=coords,
        condition_ids=ids,
    )
    model = compute_rdm(pattern, ids, metric="correlation")
    return data, model, planted_idx
