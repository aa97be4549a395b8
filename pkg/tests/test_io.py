"""NPY codec, manifest loaders, and results round-trips."""

import csv
import json
import os
import struct

import numpy as np
import pytest

from conftest import random_rdm, stack_of
from net2rdm.core import ActivationSet, SubjectRDMStack, VoxelDataset
from net2rdm.errors import (
    AsymmetricRdm,
    BadHeader,
    BadMagic,
    FortranOrderUnsupported,
    ManifestError,
    MismatchedStimulusCount,
    MissingFile,
    NonzeroDiagonal,
    TruncatedPayload,
    UnsupportedDescr,
    UnsupportedShape,
)
from net2rdm.io import (
    ResultsDocument,
    load_activation_set,
    load_brain_data,
    load_rdm_set,
    load_results_json,
    read_npy,
    results_from_json,
    results_to_json,
    write_activation_set,
    write_brain_rdms,
    write_brain_voxels,
    write_npy,
    write_rdm_set,
    write_results_csv,
    write_results_json,
)
from net2rdm.rsa import rsa_evaluate
from net2rdm.wrsa import WrsaConfig, wrsa_evaluate


def build_npy_bytes(header_dict_text, payload):
    """Assemble NPY bytes by hand, independent of the writer under test."""
    magic = b"\x93NUMPY" + bytes([1, 0])
    unpadded = len(magic) + 2 + len(header_dict_text) + 1
    pad = (-unpadded) % 64
    header = (header_dict_text + " " * pad + "\n").encode("ascii")
    return magic + struct.pack("<H", len(header)) + header + payload


class TestReadNpy:
    def test_hand_built_file(self, tmp_path):
        payload = np.arange(6, dtype="<f8").tobytes()
        blob = build_npy_bytes(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (2, 3), }", payload
        )
        path = tmp_path / "hand.npy"
        path.write_bytes(blob)
        arr = read_npy(str(path))
        assert arr.shape == (2, 3)
        assert arr.descr == "<f8"
        np.testing.assert_array_equal(arr.values, np.arange(6).reshape(2, 3))

    def test_fortran_order_rejected(self, tmp_path):
        blob = build_npy_bytes(
            "{'descr': '<f8', 'fortran_order': True, 'shape': (2, 3), }", b"\0" * 48
        )
        path = tmp_path / "f.npy"
        path.write_bytes(blob)
        with pytest.raises(FortranOrderUnsupported):
            read_npy(str(path))

    def test_truncated_payload(self, tmp_path):
        payload = np.arange(6, dtype="<f8").tobytes()[:-1]
        blob = build_npy_bytes(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (2, 3), }", payload
        )
        path = tmp_path / "t.npy"
        path.write_bytes(blob)
        with pytest.raises(TruncatedPayload):
            read_npy(str(path))

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.npy"
        path.write_bytes(b"NOTANPYFILE")
        with pytest.raises(BadMagic):
            read_npy(str(path))

    def test_unsupported_version(self, tmp_path):
        blob = build_npy_bytes(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (3,), }",
            np.zeros(3).tobytes(),
        )
        path = tmp_path / "v2.npy"
        path.write_bytes(blob[:6] + bytes([2, 0]) + blob[8:])
        with pytest.raises(BadHeader, match="version"):
            read_npy(str(path))

    def test_integer_descr_rejected(self, tmp_path):
        path = tmp_path / "ints.npy"
        np.save(path, np.arange(6).reshape(2, 3))
        with pytest.raises(UnsupportedDescr):
            read_npy(str(path))

    def test_big_endian_rejected(self, tmp_path):
        blob = build_npy_bytes(
            "{'descr': '>f8', 'fortran_order': False, 'shape': (3,), }",
            np.zeros(3).tobytes(),
        )
        path = tmp_path / "be.npy"
        path.write_bytes(blob)
        with pytest.raises(UnsupportedDescr):
            read_npy(str(path))

    def test_four_dims_rejected(self, tmp_path):
        blob = build_npy_bytes(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (1, 1, 1, 1), }",
            np.zeros(1).tobytes(),
        )
        path = tmp_path / "4d.npy"
        path.write_bytes(blob)
        with pytest.raises(UnsupportedShape):
            read_npy(str(path))

    def test_f4_widened(self, tmp_path):
        x = np.random.default_rng(0).standard_normal((4, 3)).astype(np.float32)
        path = tmp_path / "f4.npy"
        np.save(path, x)
        arr = read_npy(str(path))
        assert arr.descr == "<f4"
        assert arr.values.dtype == np.float64
        np.testing.assert_array_equal(arr.values, x.astype(np.float64))

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFile, match="nowhere.npy"):
            read_npy(str(tmp_path / "nowhere.npy"))


class TestWriteNpy:
    @pytest.mark.parametrize("shape", [(4, 5), (7,), (2, 3, 4), (0, 3)])
    def test_matches_numpy_save_bytes(self, tmp_path, shape):
        x = np.random.default_rng(1).standard_normal(shape)
        mine, ref = tmp_path / "mine.npy", tmp_path / "ref.npy"
        write_npy(str(mine), x)
        np.save(ref, x)
        assert mine.read_bytes() == ref.read_bytes()

    def test_round_trip_bit_exact(self, tmp_path):
        x = np.random.default_rng(2).standard_normal((4, 5))
        path = tmp_path / "rt.npy"
        write_npy(str(path), x)
        back = read_npy(str(path))
        assert back.values.tobytes() == x.tobytes()

    def test_nan_payload_round_trips(self, tmp_path):
        x = np.array([1.0, np.nan, -np.inf])
        path = tmp_path / "nan.npy"
        write_npy(str(path), x)
        assert read_npy(str(path)).values.tobytes() == x.tobytes()

    def test_empty_dimension(self, tmp_path):
        path = tmp_path / "empty.npy"
        write_npy(str(path), np.zeros((0, 4)))
        arr = read_npy(str(path))
        assert arr.shape == (0, 4)

    def test_four_dims_rejected_before_writing(self, tmp_path):
        path = tmp_path / "no.npy"
        with pytest.raises(UnsupportedShape):
            write_npy(str(path), np.zeros((1, 1, 1, 1)))
        assert not path.exists()


class TestActivationManifests:
    def _acts(self):
        rng = np.random.default_rng(3)
        return ActivationSet(
            network_id="netA",
            layers=(
                ("conv1", rng.standard_normal((5, 7))),
                ("fc", rng.standard_normal((5, 3))),
            ),
            stimulus_ids=tuple(f"img{i}" for i in range(5)),
        )

    def test_round_trip(self, tmp_path):
        acts = self._acts()
        manifest = write_activation_set(str(tmp_path), acts)
        loaded = load_activation_set(manifest)
        assert loaded.network_id == acts.network_id
        assert loaded.stimulus_ids == acts.stimulus_ids
        assert loaded.layer_names() == acts.layer_names()
        for (_, a), (_, b) in zip(loaded.layers, acts.layers):
            assert a.tobytes() == b.tobytes()

    def test_written_manifest_is_deterministic(self, tmp_path):
        acts = self._acts()
        m1 = write_activation_set(str(tmp_path / "a"), acts)
        m2 = write_activation_set(str(tmp_path / "b"), acts)
        assert open(m1, "rb").read() == open(m2, "rb").read()

    def test_3d_layer_flattened_row_major(self, tmp_path):
        x = np.arange(30, dtype=np.float64).reshape(5, 2, 3)
        write_npy(str(tmp_path / "layer.npy"), x)
        manifest = tmp_path / "net2rdm-activations.json"
        manifest.write_text(
            json.dumps(
                {
                    "format_version": "1",
                    "network_id": "n",
                    "stimulus_ids": [f"s{i}" for i in range(5)],
                    "layers": [{"name": "l", "file": "layer.npy"}],
                }
            )
        )
        acts = load_activation_set(str(manifest))
        np.testing.assert_array_equal(acts.layers[0][1], x.reshape(5, 6))

    def test_missing_layer_file_names_path(self, tmp_path):
        manifest = tmp_path / "net2rdm-activations.json"
        manifest.write_text(
            json.dumps(
                {
                    "format_version": "1",
                    "network_id": "n",
                    "stimulus_ids": ["a"],
                    "layers": [{"name": "l", "file": "gone.npy"}],
                }
            )
        )
        with pytest.raises(MissingFile, match="gone.npy"):
            load_activation_set(str(manifest))

    def test_stimulus_count_mismatch(self, tmp_path):
        write_npy(str(tmp_path / "layer.npy"), np.zeros((4, 2)))
        manifest = tmp_path / "net2rdm-activations.json"
        manifest.write_text(
            json.dumps(
                {
                    "format_version": "1",
                    "network_id": "n",
                    "stimulus_ids": [f"s{i}" for i in range(5)],
                    "layers": [{"name": "l", "file": "layer.npy"}],
                }
            )
        )
        with pytest.raises(MismatchedStimulusCount):
            load_activation_set(str(manifest))

    def test_wrong_format_version(self, tmp_path):
        manifest = tmp_path / "net2rdm-activations.json"
        manifest.write_text(json.dumps({"format_version": "9"}))
        with pytest.raises(ManifestError, match="format_version"):
            load_activation_set(str(manifest))


class TestBrainManifests:
    def test_rdm_round_trip(self, tmp_path):
        stack = stack_of([random_rdm(10, seed=s) for s in (1, 2, 3)], roi="EVC")
        manifest = write_brain_rdms(str(tmp_path), stack)
        loaded = load_brain_data(manifest)
        assert isinstance(loaded, SubjectRDMStack)
        assert loaded.roi_name == "EVC"
        assert loaded.subjects == stack.subjects
        for a, b in zip(loaded.rdms, stack.rdms):
            assert a.values.tobytes() == b.values.tobytes()

    def test_asymmetry_above_tolerance_rejected(self, tmp_path):
        stack = stack_of([random_rdm(8, seed=4)], roi="IT")
        write_brain_rdms(str(tmp_path), stack)
        bad = np.array(stack.rdms[0].values)
        bad[2, 5] += 1e-3
        write_npy(str(tmp_path / "rdm_sub01.npy"), bad)
        with pytest.raises(AsymmetricRdm, match=r"\[2\]\[5\]|\[5\]\[2\]"):
            load_brain_data(str(tmp_path / "net2rdm-brain.json"))

    def test_tiny_asymmetry_repaired_exactly(self, tmp_path):
        stack = stack_of([random_rdm(8, seed=5)], roi="IT")
        write_brain_rdms(str(tmp_path), stack)
        wobbled = np.array(stack.rdms[0].values)
        wobbled[1, 2] += 1e-12  # far below 1e-8 relative
        write_npy(str(tmp_path / "rdm_sub01.npy"), wobbled)
        loaded = load_brain_data(str(tmp_path / "net2rdm-brain.json"))
        vals = loaded.rdms[0].values
        assert (vals == vals.T).all()
        assert (np.diag(vals) == 0.0).all()

    def test_nonzero_diagonal_rejected(self, tmp_path):
        stack = stack_of([random_rdm(8, seed=6)], roi="IT")
        write_brain_rdms(str(tmp_path), stack)
        bad = np.array(stack.rdms[0].values)
        bad[3, 3] = 0.01
        write_npy(str(tmp_path / "rdm_sub01.npy"), bad)
        with pytest.raises(NonzeroDiagonal):
            load_brain_data(str(tmp_path / "net2rdm-brain.json"))

    def test_voxel_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        coords = np.argwhere(np.ones((3, 3, 3))).astype(float)
        data = VoxelDataset(
            subjects=("s1", "s2"),
            responses=(rng.standard_normal((5, 27)), rng.standard_normal((5, 27))),
            coordinates=coords,
            condition_ids=tuple("abcde"),
        )
        manifest = write_brain_voxels(str(tmp_path), data)
        loaded = load_brain_data(manifest)
        assert isinstance(loaded, VoxelDataset)
        assert loaded.subjects == data.subjects
        assert loaded.coordinates.tobytes() == data.coordinates.tobytes()
        for a, b in zip(loaded.responses, data.responses):
            assert a.tobytes() == b.tobytes()

    def test_voxel_coordinate_count_mismatch(self, tmp_path):
        rng = np.random.default_rng(8)
        coords = np.argwhere(np.ones((3, 3, 3))).astype(float)
        data = VoxelDataset(
            subjects=("s1",),
            responses=(rng.standard_normal((5, 27)),),
            coordinates=coords,
            condition_ids=tuple("abcde"),
        )
        write_brain_voxels(str(tmp_path), data)
        write_npy(str(tmp_path / "coordinates.npy"), coords[:20])
        with pytest.raises(ManifestError, match="responses have shape"):
            load_brain_data(str(tmp_path / "net2rdm-brain.json"))

    def test_unknown_kind(self, tmp_path):
        manifest = tmp_path / "net2rdm-brain.json"
        manifest.write_text(
            json.dumps(
                {
                    "format_version": "1",
                    "kind": "surface",
                    "condition_ids": ["a", "b", "c"],
                    "subjects": ["s1"],
                    "files": ["x.npy"],
                }
            )
        )
        with pytest.raises(ManifestError, match="kind"):
            load_brain_data(str(manifest))


class TestRdmSetManifests:
    def test_round_trip(self, tmp_path):
        layers = [("conv1", random_rdm(6, seed=1)), ("fc", random_rdm(6, seed=2))]
        manifest = write_rdm_set(str(tmp_path), "netA", "correlation", layers)
        network_id, metric, loaded = load_rdm_set(manifest)
        assert network_id == "netA" and metric == "correlation"
        assert [n for n, _ in loaded] == ["conv1", "fc"]
        for (_, a), (_, b) in zip(loaded, layers):
            assert a.values.tobytes() == b.values.tobytes()


class TestResultsDocuments:
    def _rsa_doc(self):
        brain = stack_of([random_rdm(8, seed=s) for s in (1, 2, 3)], roi="IT")
        results = rsa_evaluate(
            [("l1", random_rdm(8, seed=10)), ("l2", random_rdm(8, seed=11))],
            brain,
            model_id="netA",
        )
        return ResultsDocument(
            kind="rsa",
            config={"fdr_q": 0.05, "seed": 0, "metric": "correlation"},
            rsa_results=tuple(results),
        )

    def _wrsa_doc(self):
        brain = stack_of([random_rdm(12, seed=s) for s in (4, 5)], roi="V1")
        res = wrsa_evaluate(
            [("a", random_rdm(12, seed=20)), ("b", random_rdm(12, seed=21))],
            brain,
            WrsaConfig(n_folds=3, seed=1),
            model_id="combo",
        )
        return ResultsDocument(
            kind="wrsa",
            config={"n_folds": 3, "seed": 1},
            wrsa_results=(res,),
        )

    def test_rsa_round_trip_losslessly(self):
        doc = self._rsa_doc()
        assert results_from_json(results_to_json(doc)) == doc

    def test_wrsa_round_trip_losslessly(self):
        doc = self._wrsa_doc()
        assert results_from_json(results_to_json(doc)) == doc

    def test_serialization_is_deterministic(self):
        doc = self._rsa_doc()
        text = results_to_json(doc)
        assert text == results_to_json(doc)
        assert text == results_to_json(results_from_json(text))

    def test_timestamp_defaults_to_null(self):
        assert '"timestamp": null' in results_to_json(self._rsa_doc())

    def test_file_round_trip(self, tmp_path):
        doc = self._rsa_doc()
        path = tmp_path / "results.json"
        write_results_json(str(path), doc)
        assert load_results_json(str(path)) == doc

    def test_csv_rows_and_precision(self, tmp_path):
        doc = self._rsa_doc()
        path = tmp_path / "results.csv"
        write_results_csv(str(path), doc)
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2 * 3  # two layers, three subjects
        first = doc.rsa_results[0]
        assert float(rows[0]["rho"]) == first.per_subject_rho[0]
        assert float(rows[0]["mean_score"]) == first.mean_score
        assert rows[0]["significant"] in ("true", "false")

    def test_csv_wrsa_rows(self, tmp_path):
        doc = self._wrsa_doc()
        path = tmp_path / "results.csv"
        write_results_csv(str(path), doc)
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2  # one wrsa record, two subjects
        assert rows[0]["layer_name"] == "weighted"
