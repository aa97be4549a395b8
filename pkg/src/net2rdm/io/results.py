"""Results serialization: lossless JSON documents and a flat CSV table.

JSON floats use Python's shortest round-trip representation, keys are
sorted, and no timestamps are embedded unless the caller supplies one, so
identical runs produce byte-identical files. parse(serialize(doc)) == doc
holds at full floating-point precision.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional

from .. import __version__
from ..core import EvaluationResult, NoiseCeiling
from ..errors import ManifestError
from ..wrsa import WrsaResult

__all__ = [
    "ResultsDocument",
    "results_to_json",
    "results_from_json",
    "write_results_json",
    "load_results_json",
    "write_results_csv",
    "write_json",
]

RESULTS_FORMAT_VERSION = "1"

CSV_COLUMNS = (
    "model_id",
    "layer_name",
    "roi_name",
    "subject_id",
    "rho",
    "score",
    "mean_score",
    "sem",
    "p_value",
    "significant",
    "nc_lower",
    "nc_upper",
)


@dataclass(frozen=True)
class ResultsDocument:
    """One run's evaluation output plus the configuration that produced it."""

    kind: str  # "rsa" or "wrsa"
    config: dict
    rsa_results: tuple[EvaluationResult, ...] = ()
    wrsa_results: tuple[WrsaResult, ...] = ()
    tool_version: str = __version__
    timestamp: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("rsa", "wrsa"):
            raise ManifestError(f"unknown results kind {self.kind!r}")
        object.__setattr__(self, "rsa_results", tuple(self.rsa_results))
        object.__setattr__(self, "wrsa_results", tuple(self.wrsa_results))


def _ceiling_to_json(nc: Optional[NoiseCeiling]):
    if nc is None:
        return None
    return {"lower": nc.lower, "upper": nc.upper}


def _ceiling_from_json(obj) -> Optional[NoiseCeiling]:
    if obj is None:
        return None
    return NoiseCeiling(lower=float(obj["lower"]), upper=float(obj["upper"]))


def _rsa_to_json(r: EvaluationResult) -> dict:
    return {
        "layer_name": r.layer_name,
        "mean_score": r.mean_score,
        "model_id": r.model_id,
        "noise_ceiling": _ceiling_to_json(r.noise_ceiling),
        "p_value": r.p_value,
        "per_subject_rho": list(r.per_subject_rho),
        "per_subject_score": list(r.per_subject_score),
        "roi_name": r.roi_name,
        "sem": r.sem,
        "significant": r.significant,
        "subjects": list(r.subjects),
    }


def _rsa_from_json(obj: dict) -> EvaluationResult:
    return EvaluationResult(
        model_id=obj["model_id"],
        layer_name=obj["layer_name"],
        roi_name=obj["roi_name"],
        subjects=tuple(obj["subjects"]),
        per_subject_rho=tuple(obj["per_subject_rho"]),
        per_subject_score=tuple(obj["per_subject_score"]),
        mean_score=float(obj["mean_score"]),
        sem=None if obj["sem"] is None else float(obj["sem"]),
        p_value=None if obj["p_value"] is None else float(obj["p_value"]),
        significant=bool(obj["significant"]),
        noise_ceiling=_ceiling_from_json(obj["noise_ceiling"]),
    )


def _wrsa_to_json(r: WrsaResult) -> dict:
    return {
        "converged": r.converged,
        "folds": [list(f) for f in r.folds],
        "mean_score": r.mean_score,
        "model_id": r.model_id,
        "n_degenerate_fits": r.n_degenerate_fits,
        "noise_ceiling": _ceiling_to_json(r.noise_ceiling),
        "p_value": r.p_value,
        "per_subject_per_fold_r": [list(rs) for rs in r.per_subject_per_fold_r],
        "per_subject_score": list(r.per_subject_score),
        "predictor_names": list(r.predictor_names),
        "roi_name": r.roi_name,
        "sem": r.sem,
        "significant": r.significant,
        "skipped_folds": list(r.skipped_folds),
        "subjects": list(r.subjects),
        "weights": [[list(fw) for fw in sw] for sw in r.weights],
    }


def _wrsa_from_json(obj: dict) -> WrsaResult:
    return WrsaResult(
        model_id=obj["model_id"],
        roi_name=obj["roi_name"],
        predictor_names=tuple(obj["predictor_names"]),
        subjects=tuple(obj["subjects"]),
        folds=tuple(tuple(int(i) for i in f) for f in obj["folds"]),
        skipped_folds=tuple(int(i) for i in obj["skipped_folds"]),
        weights=tuple(
            tuple(tuple(float(w) for w in fw) for fw in sw) for sw in obj["weights"]
        ),
        per_subject_per_fold_r=tuple(
            tuple(float(v) for v in rs) for rs in obj["per_subject_per_fold_r"]
        ),
        per_subject_score=tuple(float(s) for s in obj["per_subject_score"]),
        mean_score=float(obj["mean_score"]),
        sem=None if obj["sem"] is None else float(obj["sem"]),
        p_value=None if obj["p_value"] is None else float(obj["p_value"]),
        significant=bool(obj["significant"]),
        converged=bool(obj["converged"]),
        n_degenerate_fits=int(obj["n_degenerate_fits"]),
        noise_ceiling=_ceiling_from_json(obj["noise_ceiling"]),
    )


def results_to_json(doc: ResultsDocument) -> str:
    if doc.kind == "rsa":
        records = [_rsa_to_json(r) for r in doc.rsa_results]
    else:
        records = [_wrsa_to_json(r) for r in doc.wrsa_results]
    payload = {
        "config": doc.config,
        "format_version": RESULTS_FORMAT_VERSION,
        "kind": doc.kind,
        "results": records,
        "timestamp": doc.timestamp,
        "tool": "net2rdm",
        "tool_version": doc.tool_version,
    }
    return (
        json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)
        + "\n"
    )


def results_from_json(text: str) -> ResultsDocument:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"invalid results JSON: {exc}") from exc
    if payload.get("format_version") != RESULTS_FORMAT_VERSION:
        raise ManifestError(
            f"results format_version {payload.get('format_version')!r} unsupported"
        )
    kind = payload.get("kind")
    if kind == "rsa":
        rsa = tuple(_rsa_from_json(o) for o in payload["results"])
        wrsa = ()
    elif kind == "wrsa":
        rsa = ()
        wrsa = tuple(_wrsa_from_json(o) for o in payload["results"])
    else:
        raise ManifestError(f"unknown results kind {kind!r}")
    return ResultsDocument(
        kind=kind,
        config=payload["config"],
        rsa_results=rsa,
        wrsa_results=wrsa,
        tool_version=payload["tool_version"],
        timestamp=payload["timestamp"],
    )


def write_results_json(path: str, doc: ResultsDocument) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(results_to_json(doc))


def load_results_json(path: str) -> ResultsDocument:
    with open(path, "r", encoding="utf-8") as fh:
        return results_from_json(fh.read())


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results_csv(path: str, doc: ResultsDocument) -> None:
    """One row per model/layer/subject; floats keep full precision."""
    rows = []
    for r in doc.rsa_results:
        nc = r.noise_ceiling
        for sid, rho, score in zip(r.subjects, r.per_subject_rho, r.per_subject_score):
            rows.append(
                (
                    r.model_id,
                    r.layer_name,
                    r.roi_name,
                    sid,
                    rho,
                    score,
                    r.mean_score,
                    r.sem,
                    r.p_value,
                    r.significant,
                    None if nc is None else nc.lower,
                    None if nc is None else nc.upper,
                )
            )
    for r in doc.wrsa_results:
        nc = r.noise_ceiling
        for sid, fold_rs, score in zip(
            r.subjects, r.per_subject_per_fold_r, r.per_subject_score
        ):
            mean_r = sum(fold_rs) / len(fold_rs)
            rows.append(
                (
                    r.model_id,
                    "weighted",
                    r.roi_name,
                    sid,
                    mean_r,
                    score,
                    r.mean_score,
                    r.sem,
                    r.p_value,
                    r.significant,
                    None if nc is None else nc.lower,
                    None if nc is None else nc.upper,
                )
            )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def write_json(path: str, obj) -> None:
    """Deterministic JSON dump for auxiliary documents (summaries etc.)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)
        fh.write("\n")
