"""Command-line front end: rdm, rsa, wrsa, and searchlight subcommands.

Every failure prints exactly one ``CODE: message`` line to standard error.
Exit status is 0 on success, 1 for usage and data errors, 2 when an
internal invariant breaks. Output directories are staged: files appear in
the target directory only after the whole command has succeeded, so a
failed run never leaves partial artifacts behind.
"""

import argparse
import contextlib
import dataclasses
import os
import shutil
import sys

import numpy as np

from .core import SubjectRDMStack, VoxelDataset
from .errors import Net2RdmError
from .io import (
    write_json,
    load_activation_set,
    load_brain_data,
    load_rdm_set,
    ResultsDocument,
    write_npy,
    write_rdm_set,
    write_results_csv,
    write_results_json,
)
from .rdm import METRICS, compute_rdm
from .report import render_report, spec_from_rsa_results, spec_from_wrsa_results
from .rsa import RsaConfig, evaluate_models
from .searchlight import SearchlightConfig, searchlight_rsa
from .stats import default_scheme, fdr_bh
from .wrsa import WrsaConfig, wrsa_evaluate

WORKERS_ENV = "NET2RDM_WORKERS"
TOP_K_CENTERS = 10


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage problems through CliError."""

    def error(self, message):
        raise CliError("E_USAGE", message)


@contextlib.contextmanager
def staged_output(out_dir, force):
    """Yield a scratch directory; move its contents into out_dir on success.

    The scratch lives next to the target so the final publish is a same-
    filesystem rename. Any exception discards the scratch, leaving the
    target untouched.
    """
    out_dir = os.path.abspath(out_dir)
    if os.path.isdir(out_dir):
        if os.listdir(out_dir) and not force:
            raise CliError(
                "E_EXISTS",
                f"output directory {out_dir} is not empty (pass --force to overwrite)",
            )
    elif os.path.exists(out_dir):
        raise CliError("E_EXISTS", f"{out_dir} exists and is not a directory")
    partial = out_dir + ".partial"
    if os.path.exists(partial):
        shutil.rmtree(partial)
    os.makedirs(partial)
    try:
        yield partial
    except BaseException:
        shutil.rmtree(partial, ignore_errors=True)
        raise
    if not os.path.exists(out_dir):
        os.rename(partial, out_dir)
    else:
        for name in sorted(os.listdir(partial)):
            os.replace(os.path.join(partial, name), os.path.join(out_dir, name))
        os.rmdir(partial)


def _require_rdm_kind(brain, command):
    if not isinstance(brain, SubjectRDMStack):
        raise CliError(
            "E_KIND",
            f"{command} needs an rdm-kind brain manifest, got voxel data",
        )
    return brain


def _load_models(paths):
    return [load_rdm_set(path) for path in paths]


def _warn_single_subject(brain):
    if len(brain.subjects) == 1:
        print(
            "warning: single subject; sem and p-values are unavailable and "
            "no significance is assessed",
            file=sys.stderr,
        )


def _print_table(header, rows):
    widths = [
        max(len(str(header[i])), max((len(str(r[i])) for r in rows), default=0))
        for i in range(len(header))
    ]
    line = "  ".join(str(h).ljust(w) for h, w in zip(header, widths))
    print(line.rstrip())
    for row in rows:
        print("  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip())


def _best_layer_table(results):
    best = {}
    order = []
    for res in results:
        if res.model_id not in best:
            order.append(res.model_id)
            best[res.model_id] = res
        elif res.mean_score > best[res.model_id].mean_score:
            best[res.model_id] = res
    rows = []
    for model_id in order:
        res = best[model_id]
        p_text = "-" if res.p_value is None else f"{res.p_value:.4g}"
        rows.append(
            (
                model_id,
                res.layer_name,
                f"{res.mean_score:.4f}",
                p_text,
                "*" if res.significant else "",
            )
        )
    _print_table(("model", "best layer", "mean score", "p-value", "sig"), rows)


def cmd_rdm(args):
    if args.metric not in METRICS:
        raise CliError(
            "E_METRIC",
            f"unknown metric {args.metric!r} (choose from {', '.join(METRICS)})",
        )
    acts = load_activation_set(args.activations)
    layers = [
        (name, compute_rdm(matrix, acts.stimulus_ids, metric=args.metric))
        for name, matrix in acts.layers
    ]
    with staged_output(args.out, args.force) as scratch:
        write_rdm_set(scratch, acts.network_id, args.metric, layers)
    print(f"wrote {len(layers)} RDMs ({args.metric}) for {acts.network_id} to {args.out}")
    return 0


def cmd_rsa(args):
    brain = _require_rdm_kind(load_brain_data(args.brain), "rsa")
    _warn_single_subject(brain)
    models = [
        (network_id, layers) for network_id, _, layers in _load_models(args.model_rdms)
    ]
    scheme = default_scheme(len(brain.subjects), args.seed)
    config = RsaConfig(fdr_q=args.fdr_q, permutation=scheme)
    results = evaluate_models(models, brain, config)
    doc = ResultsDocument(
        kind="rsa",
        config={
            "brain": args.brain,
            "fdr_q": args.fdr_q,
            "model_rdms": list(args.model_rdms),
            "seed": args.seed,
        },
        rsa_results=tuple(results),
    )
    with staged_output(args.out, args.force) as scratch:
        write_results_json(os.path.join(scratch, "results.json"), doc)
        write_results_csv(os.path.join(scratch, "results.csv"), doc)
        if args.plot:
            title = f"RSA vs {brain.roi_name}"
            svg = render_report(spec_from_rsa_results(results, title))
            with open(os.path.join(scratch, "report.svg"), "w", encoding="utf-8", newline="") as fh:
                fh.write(svg)
    _best_layer_table(results)
    return 0


def cmd_wrsa(args):
    brain = _require_rdm_kind(load_brain_data(args.brain), "wrsa")
    _warn_single_subject(brain)
    loaded = _load_models(args.model_rdms)
    predictors = []
    for network_id, _, layers in loaded:
        for layer_name, rdm in layers:
            name = layer_name if len(loaded) == 1 else f"{network_id}:{layer_name}"
            predictors.append((name, rdm))
    model_id = "+".join(network_id for network_id, _, _ in loaded)
    config = WrsaConfig(
        n_folds=args.folds, seed=args.seed, nnls_tolerance=args.nnls_tol
    )
    result = wrsa_evaluate(predictors, brain, config, model_id=model_id)
    if result.p_value is not None:
        flag = bool(fdr_bh([result.p_value], q=args.fdr_q)[0])
        result = dataclasses.replace(result, significant=flag)
    doc = ResultsDocument(
        kind="wrsa",
        config={
            "brain": args.brain,
            "fdr_q": args.fdr_q,
            "folds": args.folds,
            "model_rdms": list(args.model_rdms),
            "nnls_tol": args.nnls_tol,
            "seed": args.seed,
        },
        wrsa_results=(result,),
    )
    with staged_output(args.out, args.force) as scratch:
        write_results_json(os.path.join(scratch, "results.json"), doc)
        write_results_csv(os.path.join(scratch, "results.csv"), doc)
        if args.plot:
            title = f"weighted RSA vs {brain.roi_name}"
            svg = render_report(spec_from_wrsa_results([result], title))
            with open(os.path.join(scratch, "report.svg"), "w", encoding="utf-8", newline="") as fh:
                fh.write(svg)
    p_text = "-" if result.p_value is None else f"{result.p_value:.4g}"
    _print_table(
        ("model", "mean score", "p-value", "sig"),
        [
            (
                result.model_id,
                f"{result.mean_score:.4f}",
                p_text,
                "*" if result.significant else "",
            )
        ],
    )
    return 0


def _resolve_workers(args):
    if args.workers is not None:
        value = args.workers
    else:
        raw = os.environ.get(WORKERS_ENV)
        if raw is None:
            return 1
        try:
            value = int(raw)
        except ValueError:
            raise CliError("E_USAGE", f"{WORKERS_ENV} must be an integer, got {raw!r}")
    if value < 1:
        raise CliError("E_USAGE", f"--workers must be >= 1, got {value}")
    return value


def _pick_layer(layers, requested):
    names = [name for name, _ in layers]
    if requested is not None:
        for name, rdm in layers:
            if name == requested:
                return name, rdm
        raise CliError(
            "E_USAGE", f"layer {requested!r} not in manifest (has: {', '.join(names)})"
        )
    if len(layers) == 1:
        return layers[0]
    raise CliError(
        "E_USAGE",
        f"manifest has {len(layers)} layers; pick one with --layer (has: {', '.join(names)})",
    )


def cmd_searchlight(args):
    brain = load_brain_data(args.brain)
    if not isinstance(brain, VoxelDataset):
        raise CliError(
            "E_KIND", "searchlight needs a voxel-kind brain manifest, got rdm data"
        )
    _, _, layers = load_rdm_set(args.model_rdm)
    layer_name, model_rdm = _pick_layer(layers, args.layer)
    workers = _resolve_workers(args)
    config = SearchlightConfig(radius_mm=args.radius, min_voxels=args.min_voxels)
    result = searchlight_rsa(brain, model_rdm, config, n_workers=workers)

    valid = result.valid
    order = np.argsort(-result.mean_scores[valid], kind="stable")
    valid_indices = np.flatnonzero(valid)[order]
    top = []
    for idx in valid_indices[:TOP_K_CENTERS]:
        top.append(
            {
                "index": int(idx),
                "coordinate": [float(c) for c in brain.coordinates[idx]],
                "mean_score": float(result.mean_scores[idx]),
                "n_voxels": int(result.n_voxels_per_sphere[idx]),
            }
        )
    summary = {
        "format_version": "1",
        "layer_name": layer_name,
        "min_voxels": args.min_voxels,
        "n_valid_centers": int(valid.sum()),
        "n_voxels": int(result.per_subject_scores.shape[1]),
        "radius_mm": args.radius,
        "subjects": list(result.subjects),
        "top_centers": top,
    }
    with staged_output(args.out, args.force) as scratch:
        write_npy(os.path.join(scratch, "map.npy"), result.per_subject_scores)
        write_npy(os.path.join(scratch, "mean_map.npy"), result.mean_scores)
        write_npy(os.path.join(scratch, "coordinates.npy"), brain.coordinates)
        write_json(os.path.join(scratch, "summary.json"), summary)
    best = top[0]
    print(
        f"{summary['n_valid_centers']} valid centers; best center "
        f"{best['coordinate']} mean score {best['mean_score']:.4f}"
    )
    return 0


def _add_common_out(p):
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument(
        "--force",
        action="store_true",
        help="overwrite files in a non-empty output directory",
    )


def _add_rsa_like(p):
    p.add_argument(
        "--model-rdms",
        action="append",
        required=True,
        metavar="MANIFEST",
        help="RDM-set manifest; repeat for several models",
    )
    p.add_argument("--brain", required=True, help="brain manifest (rdm kind)")
    p.add_argument("--fdr-q", type=float, default=0.05, help="FDR level (default 0.05)")
    p.add_argument("--seed", type=int, default=0, help="permutation seed (default 0)")
    p.add_argument("--plot", action="store_true", help="also write report.svg")
    _add_common_out(p)


def build_parser():
    parser = _Parser(prog="net2rdm", description="RDM computation and brain-model comparison")
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    p_rdm = sub.add_parser("rdm", help="compute RDMs from an activation manifest")
    p_rdm.add_argument("--activations", required=True, help="activation manifest path")
    p_rdm.add_argument(
        "--metric",
        default="correlation",
        help="dissimilarity metric: correlation, euclidean, or cosine",
    )
    _add_common_out(p_rdm)
    p_rdm.set_defaults(func=cmd_rdm)

    p_rsa = sub.add_parser("rsa", help="score model RDMs against a brain RDM stack")
    _add_rsa_like(p_rsa)
    p_rsa.set_defaults(func=cmd_rsa)

    p_wrsa = sub.add_parser(
        "wrsa", help="fit a non-negative weighted combination of model RDMs"
    )
    _add_rsa_like(p_wrsa)
    p_wrsa.add_argument("--folds", type=int, default=5, help="condition folds (default 5)")
    p_wrsa.add_argument(
        "--nnls-tol", type=float, default=1e-10, help="NNLS stopping tolerance"
    )
    p_wrsa.set_defaults(func=cmd_wrsa)

    p_sl = sub.add_parser("searchlight", help="whole-volume sphere-wise RSA map")
    p_sl.add_argument("--brain", required=True, help="brain manifest (voxel kind)")
    p_sl.add_argument("--model-rdm", required=True, help="RDM-set manifest path")
    p_sl.add_argument(
        "--layer", default=None, help="layer to use when the manifest has several"
    )
    p_sl.add_argument("--radius", type=float, default=10.0, help="sphere radius in mm")
    p_sl.add_argument(
        "--min-voxels", type=int, default=5, help="smallest sphere worth scoring"
    )
    p_sl.add_argument(
        "--workers",
        type=int,
        default=None,
        help=f"worker threads (default: ${WORKERS_ENV} or 1)",
    )
    _add_common_out(p_sl)
    p_sl.set_defaults(func=cmd_searchlight)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliError as err:
        print(f"{err.code}: {err}", file=sys.stderr)
        return 1
    except Net2RdmError as err:
        print(f"{err.code}: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # pragma: no cover - defensive
        print(f"E_INTERNAL: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
