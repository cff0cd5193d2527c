"""HTTP API for the expert review loop (the cloud half of the split).

Serves the queue, item details, rendered frames, corrected counts and the
training-set export over JSON; the browser UI in ``frontend/`` talks only
to these endpoints.  If a built UI is present its static files are mounted
at the root path.
"""

from __future__ import annotations

import io
from dataclasses import asdict
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .formats import read_sraw
from .review import ExpertAnnotation, ItemResolvedError, ReviewStore, UnknownItemError

UI_DIST = Path(__file__).resolve().parents[2] / "frontend" / "dist"


class AnnotationBody(BaseModel):
    kind: str
    payload: object
    corrected_species: str | None = None
    corrected_count_delta: int | None = None
    author: str = "expert"
    resolution: str | None = None  # accept | correct | reject; inferred when omitted


def _item_json(store: ReviewStore, item) -> dict:
    data = asdict(item)
    data["annotations"] = [asdict(a) for a in store.annotations_for(item.item_id)]
    return data


def create_app(
    data_dir: str | Path,
    frames_dir: str | Path | None = None,
    confidence_threshold: float = 0.5,
) -> FastAPI:
    store = ReviewStore(data_dir)
    frames_root = Path(frames_dir) if frames_dir else Path(data_dir)
    app = FastAPI(title="sonarflow review service")
    app.state.store = store
    app.state.confidence_threshold = confidence_threshold
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    frame_cache: dict[str, np.ndarray] = {}

    @app.get("/api/queue")
    def queue(site: str | None = None, status: str | None = None):
        items = store.list_items(site_id=site, status=status)
        return {
            "items": [
                {
                    "item_id": i.item_id,
                    "site_id": i.site_id,
                    "reason": i.reason,
                    "status": i.status,
                    "confidence": i.confidence,
                    "frame_file": i.frame_file,
                    "frame_index": i.frame_index,
                    "track_id": i.track_id,
                    "created_at": i.created_at,
                }
                for i in items
            ]
        }

    @app.get("/api/items/{item_id}")
    def get_item(item_id: str):
        try:
            return _item_json(store, store.get_item(item_id))
        except UnknownItemError:
            raise HTTPException(status_code=404, detail=f"unknown item {item_id}")

    @app.post("/api/items/{item_id}/annotations")
    def annotate(item_id: str, body: AnnotationBody):
        try:
            annotation = ExpertAnnotation(
                item_id=item_id,
                kind=body.kind,
                payload=body.payload,
                corrected_species=body.corrected_species,
                corrected_count_delta=body.corrected_count_delta,
                author=body.author,
            )
            item = store.submit_annotation(item_id, annotation, resolution=body.resolution)
        except UnknownItemError:
            raise HTTPException(status_code=404, detail=f"unknown item {item_id}")
        except ItemResolvedError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return _item_json(store, item)

    @app.get("/api/counts")
    def counts(site: str = "default"):
        up, down, net = store.corrected_counts(site)
        base_up, base_down = store.base_counts(site)
        return {
            "site_id": site,
            "upstream": up,
            "downstream": down,
            "net": net,
            "base_upstream": base_up,
            "base_downstream": base_down,
        }

    @app.get("/api/frames/{file}/{index}")
    def frame_png(file: str, index: int):
        if "/" in file or ".." in file:
            raise HTTPException(status_code=400, detail="bad file name")
        if file not in frame_cache:
            path = frames_root / file
            if not path.exists():
                raise HTTPException(status_code=404, detail=f"no such frame file {file}")
            _, frames = read_sraw(path)
            frame_cache[file] = frames
        frames = frame_cache[file]
        if not 0 <= index < frames.shape[0]:
            raise HTTPException(status_code=404, detail=f"frame index {index} out of range")
        from PIL import Image

        # image rows are range bins, columns are beams, matching box coords
        pixels = (np.clip(frames[index].T, 0.0, 1.0) * 255).astype(np.uint8)
        buf = io.BytesIO()
        Image.fromarray(pixels, mode="L").save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.post("/api/export")
    def export(site: str | None = None, path: str | None = None):
        target = Path(path) if path else Path(data_dir) / "training_export.csv"
        rows = store.export_training_set(target, site_id=site)
        return {"path": str(target), "rows": rows, "species_legend": store.species_legend(site)}

    if UI_DIST.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=UI_DIST, html=True), name="ui")

    return app
