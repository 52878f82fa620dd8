# agency_count/datasets/manifest.py
"""
JSON manifest for point-annotated scenes::

    {"stride_hint": 8,
     "samples": [{"id": "...", "file": "images/x.png",
                  "points": [[x, y], ...], "split": "labeled"}]}

Image paths are relative to the manifest's directory; images are 8-bit PNG.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import List, Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError
from pydantic import BaseModel, Field, ValidationError

from agency_count.core.errors import ManifestError
from agency_count.datasets.models import (
    SceneDataset,
    SceneSample,
    Split,
    out_of_bounds,
    to_float_image,
)

logger = logging.getLogger(__name__)

MANIFEST_NAME = "dataset.json"


class ManifestRecord(BaseModel):
    id: str = Field(..., min_length=1)
    file: str = Field(..., min_length=1)
    points: List[Tuple[float, float]] = Field(default_factory=list)
    split: Split


class Manifest(BaseModel):
    stride_hint: int = Field(8, ge=1)
    samples: List[dict] = Field(default_factory=list)


def _write_png(image: np.ndarray, path: Path) -> None:
    raw = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(raw).save(path, format="PNG")


def _read_png(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        if img.mode not in ("L", "RGB"):
            img = img.convert("RGB")
        return to_float_image(np.asarray(img))


def save_manifest(dataset: SceneDataset, path: str | Path) -> Path:
    """Write images under ``<dir>/images`` and the manifest JSON at ``path``."""
    path = Path(path)
    if path.suffix != ".json":
        path = path / MANIFEST_NAME
    image_dir = path.parent / "images"
    image_dir.mkdir(parents=True, exist_ok=True)

    records = []
    for sample in dataset.samples:
        relative = f"images/{sample.id}.png"
        _write_png(sample.image, path.parent / relative)
        records.append(
            {
                "id": sample.id,
                "file": relative,
                "points": sample.points.tolist(),
                "split": sample.split.value,
            }
        )

    path.write_text(
        json.dumps({"stride_hint": dataset.stride_hint, "samples": records}, indent=1),
        encoding="utf-8",
    )
    logger.debug("Wrote manifest with %d samples to %s", len(records), path)
    return path


def load_manifest(path: str | Path) -> SceneDataset:
    """
    Load and validate a manifest. All record problems are collected and raised
    together as one ``ManifestError``.
    """
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        manifest = Manifest.model_validate_json(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ManifestError(f"Manifest not found: {path}") from exc
    except ValidationError as exc:
        errors = exc.errors(include_url=False, include_context=False)
        raise ManifestError(
            f"Malformed manifest {path}", details={"errors": errors, "records": []}
        ) from exc

    samples: List[SceneSample] = []
    problems: List[dict] = []
    seen: set[str] = set()
    for position, raw in enumerate(manifest.samples):
        record_id = str(raw.get("id", f"#{position}"))
        try:
            record = ManifestRecord.model_validate(raw)
        except ValidationError as exc:
            problems.append({"record_id": record_id, "message": str(exc.errors()[0]["msg"])})
            continue

        if record.id in seen:
            problems.append({"record_id": record.id, "message": "duplicate id"})
            continue
        seen.add(record.id)

        image_path = path.parent / record.file
        if not image_path.is_file():
            problems.append(
                {"record_id": record.id, "message": f"missing image file {record.file}"}
            )
            continue

        try:
            image = _read_png(image_path)
        except (OSError, UnidentifiedImageError) as exc:
            problems.append(
                {"record_id": record.id, "message": f"unreadable image {record.file}: {exc}"}
            )
            continue
        points = np.asarray(record.points, dtype=np.float64).reshape(-1, 2)
        bad = out_of_bounds(points, image.shape[:2])
        if bad:
            problems.append(
                {
                    "record_id": record.id,
                    "message": f"point {points[bad[0]].tolist()} outside image "
                    f"{image.shape[1]}x{image.shape[0]}",
                }
            )
            continue

        samples.append(
            SceneSample(id=record.id, image=image, points=points, split=record.split)
        )

    if problems:
        raise ManifestError(
            f"{len(problems)} invalid record(s) in {path}: "
            + "; ".join(f"{p['record_id']}: {p['message']}" for p in problems),
            details={"records": problems},
        )

    logger.debug("Loaded %d samples from %s", len(samples), path)
    return SceneDataset(samples=samples, stride_hint=manifest.stride_hint)
