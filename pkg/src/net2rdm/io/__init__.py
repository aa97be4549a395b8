"""On-disk interchange: NPY arrays, JSON manifests, results documents."""

from .manifests import (
    ACTIVATIONS_MANIFEST,
    BRAIN_MANIFEST,
    RDMS_MANIFEST,
    load_activation_set,
    load_brain_data,
    load_rdm_set,
    repair_symmetry,
    write_activation_set,
    write_brain_rdms,
    write_brain_voxels,
    write_rdm_set,
)
from .npy import NpyArray, read_npy, write_npy
from .results import (
    ResultsDocument,
    load_results_json,
    results_from_json,
    results_to_json,
    write_json,
    write_results_csv,
    write_results_json,
)

__all__ = [
    "ACTIVATIONS_MANIFEST",
    "BRAIN_MANIFEST",
    "RDMS_MANIFEST",
    "NpyArray",
    "ResultsDocument",
    "load_activation_set",
    "load_brain_data",
    "load_rdm_set",
    "load_results_json",
    "read_npy",
    "repair_symmetry",
    "results_from_json",
    "results_to_json",
    "write_activation_set",
    "write_brain_rdms",
    "write_brain_voxels",
    "write_json",
    "write_npy",
    "write_rdm_set",
    "write_results_csv",
    "write_results_json",
]
