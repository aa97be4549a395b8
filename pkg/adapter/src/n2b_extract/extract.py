"""Run images through a model and write the activation interchange files.

The output of one extraction is a directory holding one float32 NPY file
per requested layer ([n_images x n_features], spatial axes flattened
row-major) plus a ``net2rdm-activations.json`` manifest naming them in
forward-pass order. Stimulus ids are the image file names without
extension, sorted lexicographically; that sort defines row order.
"""

import json
import os
import re
from dataclasses import dataclass, field

import numpy as np
import torch

from .errors import (
    DuplicateStimulus,
    ExtractError,
    NoImages,
    UnknownLayer,
)
from .models import build_model
from .preprocess import IMAGE_EXTENSIONS, load_image

MANIFEST_NAME = "net2rdm-activations.json"
FORMAT_VERSION = "1"


@dataclass(frozen=True)
class ExtractionJob:
    model_name: str
    layers: tuple[str, ...]
    image_dir: str
    out_dir: str
    batch_size: int = 16
    pretrained: bool = True
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ExtractError("no layers requested")
        if self.batch_size < 1:
            raise ExtractError(f"batch_size must be >= 1, got {self.batch_size}")


def discover_images(image_dir: str) -> list[tuple[str, str]]:
    """Sorted (stimulus_id, absolute path) pairs for every image file."""
    if not os.path.isdir(image_dir):
        raise NoImages(f"not a directory: {image_dir}")
    names = sorted(
        n for n in os.listdir(image_dir)
        if n.lower().endswith(IMAGE_EXTENSIONS)
    )
    if not names:
        raise NoImages(f"no image files in {image_dir}")
    pairs = []
    seen = {}
    for name in names:
        stem = os.path.splitext(name)[0]
        if stem in seen:
            raise DuplicateStimulus(
                f"stimulus id {stem!r} appears twice: {seen[stem]} and {name}"
            )
        seen[stem] = name
        pairs.append((stem, os.path.join(image_dir, name)))
    return pairs


def _check_layers_exist(model, requested):
    available = sorted(n for n, _ in model.named_modules() if n)
    missing = [name for name in requested if name not in available]
    if missing:
        raise UnknownLayer(
            f"unknown layer(s) {', '.join(repr(m) for m in missing)}; "
            f"available: {', '.join(available)}"
        )


def _to_tensor(output, layer_name):
    if isinstance(output, torch.Tensor):
        return output
    if isinstance(output, (tuple, list)):
        for item in output:
            if isinstance(item, torch.Tensor):
                return item
    hidden = getattr(output, "last_hidden_state", None)
    if isinstance(hidden, torch.Tensor):
        return hidden
    raise ExtractError(
        f"layer {layer_name!r} produced {type(output).__name__}, not a tensor"
    )


class _Recorder:
    """Forward hooks that keep the first output per layer per batch."""

    def __init__(self, model, layer_names):
        self.captured = {}
        self.fire_order = []
        self._handles = []
        modules = dict(model.named_modules())
        for name in layer_names:
            self._handles.append(
                modules[name].register_forward_hook(self._hook_for(name))
            )

    def _hook_for(self, name):
        def hook(_module, _inputs, output):
            if name not in self.captured:
                self.captured[name] = _to_tensor(output, name).detach()
                if name not in self.fire_order:
                    self.fire_order.append(name)

        return hook

    def start_batch(self):
        self.captured = {}

    def close(self):
        for handle in self._handles:
            handle.remove()


def _safe_filename(layer_name, taken):
    base = re.sub(r"[^A-Za-z0-9._-]", "_", layer_name)
    fname = f"activations_{base}.npy"
    k = 2
    while fname in taken:
        fname = f"activations_{base}_{k}.npy"
        k += 1
    taken.add(fname)
    return fname


def extract(job: ExtractionJob) -> str:
    """Run the job; returns the path of the written manifest."""
    model, spec = build_model(job.model_name, pretrained=job.pretrained, seed=job.seed)
    _check_layers_exist(model, job.layers)
    pairs = discover_images(job.image_dir)
    stimulus_ids = [stem for stem, _ in pairs]
    pipeline = spec.build()

    recorder = _Recorder(model, job.layers)
    rows = {name: [] for name in job.layers}
    try:
        with torch.no_grad():
            for start in range(0, len(pairs), job.batch_size):
                chunk = pairs[start : start + job.batch_size]
                batch = torch.stack(
                    [pipeline(load_image(path)) for _, path in chunk]
                )
                recorder.start_batch()
                model(batch)
                for name in job.layers:
                    if name not in recorder.captured:
                        raise UnknownLayer(
                            f"layer {name!r} exists but produced no output"
                        )
                    out = recorder.captured[name]
                    rows[name].append(
                        out.reshape(out.shape[0], -1).to(torch.float32).cpu()
                    )
    finally:
        recorder.close()

    ordered = [n for n in recorder.fire_order if n in rows]
    os.makedirs(job.out_dir, exist_ok=True)
    taken = set()
    entries = []
    for name in ordered:
        matrix = torch.cat(rows[name], dim=0).contiguous().numpy()
        if matrix.shape[0] != len(stimulus_ids):
            raise ExtractError(
                f"layer {name!r}: {matrix.shape[0]} rows for "
                f"{len(stimulus_ids)} images"
            )
        fname = _safe_filename(name, taken)
        np.save(os.path.join(job.out_dir, fname), matrix)
        entries.append({"file": fname, "name": name})

    manifest_path = os.path.join(job.out_dir, MANIFEST_NAME)
    doc = {
        "format_version": FORMAT_VERSION,
        "layers": entries,
        "network_id": job.model_name,
        "stimulus_ids": stimulus_ids,
    }
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")
    return manifest_path
