"""Load, validate, and persist detection manifests and embedding matrices.

On-disk formats:

* ``manifest.jsonl`` — one JSON object per line with keys ``id``, ``image_id``,
  ``label``, ``score``, ``top5`` (list of ``[label, score]`` pairs, at most 5,
  scores non-increasing), an embedding given either inline as ``embedding``
  (list of 768 numbers) or as ``embedding_row`` (row index into the sidecar
  matrix), and optionally ``ground_truth``.
* ``embeddings.f32`` — raw little-endian float32 matrix, row-major,
  768 floats per row, no header.

Outcome files reuse the JSONL convention with a leading header record, so a
re-run over identical input produces byte-identical output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DuplicateId, SchemaError
from .taxonomy import Label, TaxonPath, parse_label

EMBEDDING_DIM = 768

OUTCOMES_FORMAT = "taxadown.outcomes/1"


@dataclass(frozen=True)
class PreEnsembleEntry:
    """One raw classifier prediction before ensemble logic rewrites the label."""

    label: TaxonPath
    score: float


@dataclass(eq=False)
class Detection:
    """One cropped animal with its classifier output and embedding."""

    id: str
    image_id: str
    ensemble_label: Label
    ensemble_score: float
    top5: tuple[PreEnsembleEntry, ...]
    embedding: np.ndarray
    ground_truth: Label | None = None


@dataclass(eq=False)
class Dataset:
    """Ordered, id-unique collection of detections."""

    detections: list[Detection]
    source_uri: str = ""
    _by_id: dict[str, Detection] = field(init=False, repr=False)

    def __post_init__(self):
        by_id: dict[str, Detection] = {}
        for det in self.detections:
            if det.id in by_id:
                raise DuplicateId(det.id)
            by_id[det.id] = det
        self._by_id = by_id

    def __len__(self) -> int:
        return len(self.detections)

    def get(self, detection_id: str) -> Detection | None:
        return self._by_id.get(detection_id)

    def __contains__(self, detection_id: str) -> bool:
        return detection_id in self._by_id


def _require(record: dict, key: str, det_id: str):
    if key not in record:
        raise SchemaError(f"detection {det_id!r}: missing field {key!r}")
    return record[key]


def _validate_embedding(values, det_id: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim != 1 or arr.shape[0] != EMBEDDING_DIM:
        raise SchemaError(
            f"detection {det_id!r}: embedding has {arr.size} components, expected {EMBEDDING_DIM}"
        )
    if not np.all(np.isfinite(arr)):
        raise SchemaError(f"detection {det_id!r}: embedding contains NaN/Inf")
    if float(np.linalg.norm(arr.astype(np.float64))) == 0.0:
        raise SchemaError(f"detection {det_id!r}: embedding has zero norm")
    return arr


def _parse_top5(raw, det_id: str) -> tuple[PreEnsembleEntry, ...]:
    if not isinstance(raw, list) or len(raw) > 5:
        raise SchemaError(f"detection {det_id!r}: top5 must be a list of at most 5 entries")
    entries = []
    prev = None
    for item in raw:
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise SchemaError(f"detection {det_id!r}: top5 entries must be [label, score] pairs")
        label = parse_label(str(item[0]))
        if not label.is_taxon:
            raise SchemaError(f"detection {det_id!r}: top5 labels must be taxon paths")
        score = float(item[1])
        if not 0.0 <= score <= 1.0:
            raise SchemaError(f"detection {det_id!r}: top5 score {score} out of [0, 1]")
        if prev is not None and score > prev:
            raise SchemaError(f"detection {det_id!r}: top5 scores must be non-increasing")
        prev = score
        entries.append(PreEnsembleEntry(label=label.taxon, score=score))
    return tuple(entries)


def read_embedding_matrix(path: str | Path) -> np.ndarray:
    """Read a raw float32 embedding matrix, one 768-float row per detection."""
    data = np.fromfile(path, dtype="<f4")
    if data.size % EMBEDDING_DIM != 0:
        raise SchemaError(
            f"embedding file {path}: {data.size} floats is not a multiple of {EMBEDDING_DIM}"
        )
    return data.reshape(-1, EMBEDDING_DIM)


def write_embedding_matrix(matrix: np.ndarray, path: str | Path) -> None:
    np.ascontiguousarray(matrix, dtype="<f4").tofile(path)


def load_manifest(manifest_path: str | Path, embeddings_path: str | Path | None = None) -> Dataset:
    """Load and validate a detection manifest.

    Embeddings referenced via ``embedding_row`` are resolved from
    ``embeddings_path``; inline ``embedding`` arrays need no sidecar.
    """
    manifest_path = Path(manifest_path)
    matrix: np.ndarray | None = None
    detections: list[Detection] = []
    with open(manifest_path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{manifest_path}:{line_no}: invalid JSON: {exc}") from exc
            det_id = str(_require(record, "id", f"line {line_no}"))
            label = parse_label(str(_require(record, "label", det_id)))
            score = float(_require(record, "score", det_id))
            if not 0.0 <= score <= 1.0:
                raise SchemaError(f"detection {det_id!r}: score {score} out of [0, 1]")
            top5 = _parse_top5(record.get("top5", []), det_id)
            if "embedding" in record:
                emb = _validate_embedding(record["embedding"], det_id)
            elif "embedding_row" in record:
                if matrix is None:
                    if embeddings_path is None:
                        raise SchemaError(
                            f"detection {det_id!r}: embedding_row given but no embeddings file"
                        )
                    matrix = read_embedding_matrix(embeddings_path)
                row = int(record["embedding_row"])
                if not 0 <= row < matrix.shape[0]:
                    raise SchemaError(
                        f"detection {det_id!r}: embedding_row {row} out of range "
                        f"for {matrix.shape[0]} rows"
                    )
                emb = _validate_embedding(matrix[row], det_id)
            else:
                raise SchemaError(f"detection {det_id!r}: needs embedding or embedding_row")
            gt = record.get("ground_truth")
            detections.append(
                Detection(
                    id=det_id,
                    image_id=str(record.get("image_id", "")),
                    ensemble_label=label,
                    ensemble_score=score,
                    top5=top5,
                    embedding=emb,
                    ground_truth=parse_label(str(gt)) if gt is not None else None,
                )
            )
    return Dataset(detections=detections, source_uri=str(manifest_path))


def save_manifest(ds: Dataset, manifest_path: str | Path, embeddings_path: str | Path) -> None:
    """Write a dataset back out in the canonical row-referenced form."""
    matrix = np.stack([d.embedding for d in ds.detections]) if ds.detections else np.empty((0, EMBEDDING_DIM))
    write_embedding_matrix(matrix, embeddings_path)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for row, det in enumerate(ds.detections):
            record = {
                "id": det.id,
                "image_id": det.image_id,
                "label": det.ensemble_label.render(),
                "score": det.ensemble_score,
                "top5": [[e.label.render(), e.score] for e in det.top5],
                "embedding_row": row,
            }
            if det.ground_truth is not None:
                record["ground_truth"] = det.ground_truth.render()
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")


def save_outcomes(outcomes: Sequence, path: str | Path) -> None:
    """Write pipeline outcomes as JSONL with a leading header record.

    Output is byte-stable for identical input order.
    """
    with open(path, "w", encoding="utf-8") as fh:
        header = {"format": OUTCOMES_FORMAT, "count": len(outcomes)}
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for out in outcomes:
            record = {
                "id": out.detection_id,
                "original_label": out.original_label.render(),
                "final_label": out.final_label.render(),
                "stage": out.decided_by.value,
                "score": out.score,
                "nearest_label": out.nearest_label.render() if out.nearest_label else None,
                "audit": list(out.audit),
            }
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")


def load_outcomes(path: str | Path) -> list:
    """Read an outcomes file written by :func:`save_outcomes`."""
    from .pipeline import DecidedBy, PipelineOutcome  # deferred to avoid a cycle

    outcomes = []
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid outcomes header") from exc
        if header.get("format") != OUTCOMES_FORMAT:
            raise SchemaError(f"{path}: unexpected outcomes format {header.get('format')!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            nearest = rec.get("nearest_label")
            nearest_label = None
            if nearest is not None:
                parsed = parse_label(nearest)
                nearest_label = parsed.taxon
            outcomes.append(
                PipelineOutcome(
                    detection_id=rec["id"],
                    original_label=parse_label(rec["original_label"]),
                    final_label=parse_label(rec["final_label"]),
                    decided_by=DecidedBy(rec["stage"]),
                    score=rec.get("score"),
                    nearest_label=nearest_label,
                    audit=list(rec.get("audit", [])),
                )
            )
    return outcomes


def iter_embeddings(ds: Dataset) -> Iterable[np.ndarray]:
    for det in ds.detections:
        yield det.embedding
