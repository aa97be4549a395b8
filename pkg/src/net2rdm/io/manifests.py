"""JSON manifests binding NPY payload files into domain objects.

Three manifest kinds, each a UTF-8 JSON object with sorted keys:

- net2rdm-activations.json: one network's per-layer activation files.
- net2rdm-brain.json: per-subject brain data, kind "rdm" or "voxel".
- net2rdm-rdms.json: a set of computed model RDMs (one file per layer).

All file references are relative to the manifest's directory. Writers are
deterministic; loading a written manifest reproduces the domain object.
"""

from __future__ import annotations

import json
import os

import numpy as np

from ..core import RDM, ActivationSet, SubjectRDMStack, VoxelDataset
from ..errors import (
    AsymmetricRdm,
    ManifestError,
    MissingFile,
    NonzeroDiagonal,
)
from .npy import read_npy, write_npy

__all__ = [
    "ACTIVATIONS_MANIFEST",
    "BRAIN_MANIFEST",
    "RDMS_MANIFEST",
    "load_activation_set",
    "write_activation_set",
    "load_brain_data",
    "write_brain_rdms",
    "write_brain_voxels",
    "load_rdm_set",
    "write_rdm_set",
    "repair_symmetry",
]

ACTIVATIONS_MANIFEST = "net2rdm-activations.json"
BRAIN_MANIFEST = "net2rdm-brain.json"
RDMS_MANIFEST = "net2rdm-rdms.json"
FORMAT_VERSION = "1"
ASYMMETRY_RTOL = 1e-8


def _read_manifest(path: str) -> dict:
    if not os.path.isfile(path):
        raise MissingFile(f"no such manifest: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ManifestError(f"{path}: manifest must be a JSON object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ManifestError(
            f"{path}: format_version {doc.get('format_version')!r} unsupported "
            f"(expected {FORMAT_VERSION!r})"
        )
    return doc


def _write_manifest(path: str, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)
        fh.write("\n")


def _require(doc: dict, path: str, key: str, kind: type) -> object:
    if key not in doc:
        raise ManifestError(f"{path}: missing required key {key!r}")
    value = doc[key]
    if not isinstance(value, kind):
        raise ManifestError(f"{path}: key {key!r} must be {kind.__name__}")
    return value


def _layer_entries(doc: dict, path: str) -> list[tuple[str, str]]:
    layers = _require(doc, path, "layers", list)
    entries = []
    for k, item in enumerate(layers):
        if not isinstance(item, dict) or "name" not in item or "file" not in item:
            raise ManifestError(f"{path}: layers[{k}] needs 'name' and 'file'")
        entries.append((str(item["name"]), str(item["file"])))
    if not entries:
        raise ManifestError(f"{path}: manifest lists no layers")
    return entries


def load_activation_set(manifest_path: str) -> ActivationSet:
    """Load per-layer activations; trailing dims flatten to one feature axis."""
    doc = _read_manifest(manifest_path)
    base = os.path.dirname(os.path.abspath(manifest_path))
    network_id = str(_require(doc, manifest_path, "network_id", str))
    stimulus_ids = [str(s) for s in _require(doc, manifest_path, "stimulus_ids", list)]
    layers = []
    for name, rel in _layer_entries(doc, manifest_path):
        arr = read_npy(os.path.join(base, rel))
        matrix = arr.values.reshape(arr.shape[0], -1) if arr.values.ndim > 1 else arr.values.reshape(-1, 1)
        layers.append((name, matrix))
    return ActivationSet(network_id=network_id, layers=tuple(layers), stimulus_ids=tuple(stimulus_ids))


def write_activation_set(out_dir: str, acts: ActivationSet) -> str:
    """Write one NPY per layer plus the activations manifest; returns its path."""
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for name, matrix in acts.layers:
        fname = f"activations_{name}.npy"
        write_npy(os.path.join(out_dir, fname), matrix)
        entries.append({"file": fname, "name": name})
    manifest_path = os.path.join(out_dir, ACTIVATIONS_MANIFEST)
    _write_manifest(
        manifest_path,
        {
            "format_version": FORMAT_VERSION,
            "layers": entries,
            "network_id": acts.network_id,
            "stimulus_ids": list(acts.stimulus_ids),
        },
    )
    return manifest_path


def repair_symmetry(values: np.ndarray, context: str) -> np.ndarray:
    """Symmetrize within tolerance; reject real asymmetry or diagonal mass.

    Tolerance is ASYMMETRY_RTOL relative to the largest absolute entry, so
    float32-roundoff asymmetry from upstream toolchains passes while data
    errors do not.
    """
    values = np.asarray(values, dtype=np.float64)
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    tol = ASYMMETRY_RTOL * max(scale, 1e-300)
    gap = float(np.max(np.abs(values - values.T))) if values.size else 0.0
    if gap > tol:
        i, j = np.unravel_index(int(np.argmax(np.abs(values - values.T))), values.shape)
        raise AsymmetricRdm(
            f"{context}: values[{i}][{j}] and values[{j}][{i}] differ by {gap:.3e} "
            f"(tolerance {tol:.3e})"
        )
    diag_mass = float(np.max(np.abs(np.diag(values)))) if values.size else 0.0
    if diag_mass > tol:
        raise NonzeroDiagonal(
            f"{context}: diagonal entry of magnitude {diag_mass:.3e} exceeds tolerance {tol:.3e}"
        )
    repaired = (values + values.T) / 2.0
    np.fill_diagonal(repaired, 0.0)
    return repaired


def _subject_files(doc: dict, path: str) -> tuple[list[str], list[str]]:
    subjects = [str(s) for s in _require(doc, path, "subjects", list)]
    files = [str(f) for f in _require(doc, path, "files", list)]
    if len(subjects) != len(files):
        raise ManifestError(
            f"{path}: {len(subjects)} subjects but {len(files)} files"
        )
    if not subjects:
        raise ManifestError(f"{path}: no subjects listed")
    return subjects, files


def load_brain_data(manifest_path: str) -> SubjectRDMStack | VoxelDataset:
    """Load a brain manifest: kind 'rdm' or 'voxel' decides the output type."""
    doc = _read_manifest(manifest_path)
    base = os.path.dirname(os.path.abspath(manifest_path))
    kind = doc.get("kind")
    condition_ids = tuple(str(c) for c in _require(doc, manifest_path, "condition_ids", list))
    subjects, files = _subject_files(doc, manifest_path)

    if kind == "rdm":
        roi_name = str(_require(doc, manifest_path, "roi_name", str))
        n = len(condition_ids)
        rdms = []
        for sid, rel in zip(subjects, files):
            arr = read_npy(os.path.join(base, rel))
            if arr.values.ndim != 2 or arr.values.shape != (n, n):
                raise ManifestError(
                    f"{manifest_path}: subject {sid!r} file has shape "
                    f"{arr.values.shape}, expected ({n}, {n})"
                )
            repaired = repair_symmetry(arr.values, f"subject {sid!r} RDM")
            rdms.append(RDM(condition_ids=condition_ids, values=repaired))
        return SubjectRDMStack(roi_name=roi_name, subjects=tuple(subjects), rdms=tuple(rdms))

    if kind == "voxel":
        coords_rel = str(_require(doc, manifest_path, "coordinates_file", str))
        coords = read_npy(os.path.join(base, coords_rel)).values
        if coords.ndim != 2 or coords.shape[1] != 3:
            raise ManifestError(
                f"{manifest_path}: coordinates file has shape {coords.shape}, "
                "expected [n_voxels x 3]"
            )
        n_cond, n_vox = len(condition_ids), coords.shape[0]
        responses = []
        for sid, rel in zip(subjects, files):
            arr = read_npy(os.path.join(base, rel))
            if arr.values.shape != (n_cond, n_vox):
                raise ManifestError(
                    f"{manifest_path}: subject {sid!r} responses have shape "
                    f"{arr.values.shape}, expected ({n_cond}, {n_vox})"
                )
            responses.append(arr.values)
        return VoxelDataset(
            subjects=tuple(subjects),
            responses=tuple(responses),
            coordinates=coords,
            condition_ids=condition_ids,
        )

    raise ManifestError(f"{manifest_path}: kind must be 'rdm' or 'voxel', got {kind!r}")


def write_brain_rdms(out_dir: str, stack: SubjectRDMStack) -> str:
    os.makedirs(out_dir, exist_ok=True)
    files = []
    for sid, rdm in zip(stack.subjects, stack.rdms):
        fname = f"rdm_{sid}.npy"
        write_npy(os.path.join(out_dir, fname), rdm.values)
        files.append(fname)
    manifest_path = os.path.join(out_dir, BRAIN_MANIFEST)
    _write_manifest(
        manifest_path,
        {
            "condition_ids": list(stack.condition_ids),
            "files": files,
            "format_version": FORMAT_VERSION,
            "kind": "rdm",
            "roi_name": stack.roi_name,
            "subjects": list(stack.subjects),
        },
    )
    return manifest_path


def write_brain_voxels(out_dir: str, data: VoxelDataset) -> str:
    os.makedirs(out_dir, exist_ok=True)
    files = []
    for sid, resp in zip(data.subjects, data.responses):
        fname = f"voxels_{sid}.npy"
        write_npy(os.path.join(out_dir, fname), resp)
        files.append(fname)
    write_npy(os.path.join(out_dir, "coordinates.npy"), data.coordinates)
    manifest_path = os.path.join(out_dir, BRAIN_MANIFEST)
    _write_manifest(
        manifest_path,
        {
            "condition_ids": list(data.condition_ids),
            "coordinates_file": "coordinates.npy",
            "files": files,
            "format_version": FORMAT_VERSION,
            "kind": "voxel",
            "subjects": list(data.subjects),
        },
    )
    return manifest_path


def load_rdm_set(manifest_path: str) -> tuple[str, str, list[tuple[str, RDM]]]:
    """Load computed model RDMs: returns (network_id, metric, [(layer, RDM)])."""
    doc = _read_manifest(manifest_path)
    base = os.path.dirname(os.path.abspath(manifest_path))
    network_id = str(_require(doc, manifest_path, "network_id", str))
    metric = str(_require(doc, manifest_path, "metric", str))
    condition_ids = tuple(str(c) for c in _require(doc, manifest_path, "condition_ids", list))
    n = len(condition_ids)
    layers = []
    for name, rel in _layer_entries(doc, manifest_path):
        arr = read_npy(os.path.join(base, rel))
        if arr.values.shape != (n, n):
            raise ManifestError(
                f"{manifest_path}: layer {name!r} file has shape {arr.values.shape}, "
                f"expected ({n}, {n})"
            )
        repaired = repair_symmetry(arr.values, f"layer {name!r} RDM")
        layers.append((name, RDM(condition_ids=condition_ids, values=repaired)))
    return network_id, metric, layers


def write_rdm_set(
    out_dir: str,
    network_id: str,
    metric: str,
    layers: list[tuple[str, RDM]],
) -> str:
    if not layers:
        raise ManifestError("cannot write an RDM set with no layers")
    ref_ids = layers[0][1].condition_ids
    for name, rdm in layers:
        if rdm.condition_ids != ref_ids:
            raise ManifestError(f"layer {name!r} has different condition ids")
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for name, rdm in layers:
        fname = f"rdm_{name}.npy"
        write_npy(os.path.join(out_dir, fname), rdm.values)
        entries.append({"file": fname, "name": name})
    manifest_path = os.path.join(out_dir, RDMS_MANIFEST)
    _write_manifest(
        manifest_path,
        {
            "condition_ids": list(ref_ids),
            "format_version": FORMAT_VERSION,
            "layers": entries,
            "metric": metric,
            "network_id": network_id,
        },
    )
    return manifest_path
