"""Command line entry point for extraction jobs."""

import json
import os

import pytest

from n2b_extract.cli import main
from n2b_extract.models import MODEL_NAMES


def read_tree(out_dir):
    out = {}
    for name in sorted(os.listdir(out_dir)):
        with open(os.path.join(out_dir, name), "rb") as fh:
            out[name] = fh.read()
    return out


class TestListing:
    def test_list_models(self, capsys):
        assert main(["--list-models"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert tuple(lines) == MODEL_NAMES

    def test_list_layers(self, capsys):
        assert main(["--list-layers", "ResNet50"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert "fc" in lines
        assert "layer4.2.conv3" in lines
        assert lines == sorted(lines)

    def test_list_layers_unknown_model(self, capsys):
        assert main(["--list-layers", "AlexNet"]) == 1
        assert "UnknownModel" in capsys.readouterr().err


class TestExtraction:
    def run(self, image_dir, out_dir, extra=()):
        return main(
            [
                "--model",
                "ResNet50",
                "--layers",
                "avgpool,fc",
                "--images",
                image_dir,
                "--out",
                out_dir,
                "--random-init",
                *extra,
            ]
        )

    def test_writes_loadable_manifest(self, tmp_path, image_dir, capsys):
        net2rdm_io = pytest.importorskip("net2rdm.io")
        out = str(tmp_path / "out")
        assert self.run(image_dir, out) == 0
        manifest = os.path.join(out, "net2rdm-activations.json")
        assert f"wrote {manifest}" in capsys.readouterr().out
        acts = net2rdm_io.load_activation_set(manifest)
        assert acts.layer_names() == ("avgpool", "fc")
        assert acts.n_stimuli == 5

    def test_rerun_bit_identical(self, tmp_path, image_dir):
        assert self.run(image_dir, str(tmp_path / "a")) == 0
        assert self.run(image_dir, str(tmp_path / "b")) == 0
        assert read_tree(str(tmp_path / "a")) == read_tree(str(tmp_path / "b"))

    def test_seed_changes_random_weights(self, tmp_path, image_dir):
        assert self.run(image_dir, str(tmp_path / "a"), ["--seed", "1"]) == 0
        assert self.run(image_dir, str(tmp_path / "b"), ["--seed", "2"]) == 0
        a = read_tree(str(tmp_path / "a"))
        b = read_tree(str(tmp_path / "b"))
        assert a["net2rdm-activations.json"] == b["net2rdm-activations.json"]
        assert a["activations_fc.npy"] != b["activations_fc.npy"]

    def test_unknown_model_fails(self, tmp_path, image_dir, capsys):
        code = main(
            [
                "--model",
                "VGG16",
                "--layers",
                "fc",
                "--images",
                image_dir,
                "--out",
                str(tmp_path / "out"),
                "--random-init",
            ]
        )
        assert code == 1
        err = capsys.readouterr().err
        assert "UnknownModel" in err
        assert "ResNet50" in err

    def test_unknown_layer_fails(self, tmp_path, image_dir, capsys):
        code = main(
            [
                "--model",
                "ResNet50",
                "--layers",
                "nope",
                "--images",
                image_dir,
                "--out",
                str(tmp_path / "out"),
                "--random-init",
            ]
        )
        assert code == 1
        assert "UnknownLayer" in capsys.readouterr().err

    def test_missing_required_flag(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["--model", "ResNet50"])
        assert err.value.code == 2


def test_manifest_is_deterministic_json(tmp_path, image_dir):
    out = str(tmp_path / "out")
    assert (
        main(
            [
                "--model",
                "ResNet50",
                "--layers",
                "avgpool",
                "--images",
                image_dir,
                "--out",
                out,
                "--random-init",
            ]
        )
        == 0
    )
    raw = open(os.path.join(out, "net2rdm-activations.json")).read()
    doc = json.loads(raw)
    assert raw == json.dumps(doc, indent=2, sort_keys=True) + "\n"
