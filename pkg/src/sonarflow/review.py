"""Expert review queue: flagging, corrections, corrected counts, export.

Persistence is one append-only JSON-lines file per site under a data
directory; an in-memory index is rebuilt on load.  Nothing is ever mutated
or deleted on disk, so the log doubles as the audit trail.  Item ids are a
stable hash of (site, frame, track, reason), which makes re-flagging after
a pipeline re-run idempotent.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable

from .analytics import CountEvent
from .formats import MotRecord, write_mot_csv
from .simulator import Direction
from .tracker import TrackOutput

REASONS = ("LowConfidence", "CountAmbiguity", "ExpertRequest")
STATUSES = ("Pending", "Accepted", "Corrected", "Rejected")
ANNOTATION_KINDS = ("Dot", "Box", "Text")


class UnknownItemError(KeyError):
    pass


class ItemResolvedError(RuntimeError):
    """The item was already resolved; annotations are one-shot."""


@dataclass(frozen=True)
class ExpertAnnotation:
    item_id: str
    kind: str
    payload: object
    corrected_species: str | None = None
    corrected_count_delta: int | None = None
    author: str = "expert"
    created_at: str = ""

    def __post_init__(self) -> None:
        if self.kind not in ANNOTATION_KINDS:
            raise ValueError(f"kind must be one of {ANNOTATION_KINDS}")
        if self.kind == "Dot":
            if not (isinstance(self.payload, (list, tuple)) and len(self.payload) == 2):
                raise ValueError("Dot payload must be (x, y)")
        elif self.kind == "Box":
            if not (isinstance(self.payload, (list, tuple)) and len(self.payload) == 4):
                raise ValueError("Box payload must be (x, y, w, h)")
        else:
            if not isinstance(self.payload, str):
                raise ValueError("Text payload must be a string")


@dataclass
class ReviewItem:
    item_id: str
    site_id: str
    frame_file: str
    frame_index: int
    track_id: int
    box: tuple[float, float, float, float]
    confidence: float
    species_label: str
    reason: str
    status: str = "Pending"
    created_at: str = ""
    resolved_at: str | None = None
    direction: str | None = None  # crossing direction for CountAmbiguity items
    corrected_box: tuple[float, float, float, float] | None = None
    corrected_species: str | None = None

    def effective_box(self):
        return self.corrected_box if self.corrected_box is not None else self.box

    def effective_species(self) -> str:
        return self.corrected_species if self.corrected_species else self.species_label


def deterministic_item_id(site_id: str, frame_index: int, track_id: int, reason: str) -> str:
    digest = hashlib.sha256(f"{site_id}:{frame_index}:{track_id}:{reason}".encode()).hexdigest()
    return digest[:16]


def flag_outputs(
    outputs: Iterable[TrackOutput],
    confidence_threshold: float,
    count_events: Iterable[CountEvent] = (),
    site_id: str = "default",
    frame_file: str = "",
) -> list[ReviewItem]:
    """Queue items for low-confidence outputs and ambiguous crossings.

    One LowConfidence item per confirmed-track output strictly below the
    threshold; one CountAmbiguity item per crossing whose track's mean
    output confidence is below the threshold.
    """
    if not 0.0 <= confidence_threshold <= 1.0:
        raise ValueError("confidence_threshold must be in [0, 1]")
    outputs = list(outputs)
    items = []
    for out in outputs:
        if out.confidence < confidence_threshold:
            items.append(
                ReviewItem(
                    item_id=deterministic_item_id(site_id, out.frame_index, out.track_id, "LowConfidence"),
                    site_id=site_id,
                    frame_file=frame_file,
                    frame_index=out.frame_index,
                    track_id=out.track_id,
                    box=tuple(out.box),
                    confidence=out.confidence,
                    species_label=out.species_label,
                    reason="LowConfidence",
                )
            )
    by_track: dict[int, list[TrackOutput]] = {}
    for out in outputs:
        by_track.setdefault(out.track_id, []).append(out)
    for event in count_events:
        track_outputs = by_track.get(event.track_id, [])
        if not track_outputs:
            continue
        mean_conf = sum(o.confidence for o in track_outputs) / len(track_outputs)
        if mean_conf < confidence_threshold:
            nearest = min(track_outputs, key=lambda o: abs(o.frame_index - event.frame_index))
            items.append(
                ReviewItem(
                    item_id=deterministic_item_id(site_id, event.frame_index, event.track_id, "CountAmbiguity"),
                    site_id=site_id,
                    frame_file=frame_file,
                    frame_index=event.frame_index,
                    track_id=event.track_id,
                    box=tuple(nearest.box),
                    confidence=mean_conf,
                    species_label=nearest.species_label,
                    reason="CountAmbiguity",
                    direction=event.direction.value,
                )
            )
    return items


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


class ReviewStore:
    """Per-site append-only event log plus in-memory index.

    Events: ``base_counts`` (pipeline tallies), ``item`` (flagged output) and
    ``annotation`` (expert input with the resulting status).  Concurrent
    readers are safe; writers serialize on a lock and flush per event.
    """

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._items: dict[str, ReviewItem] = {}
        self._annotations: dict[str, list[ExpertAnnotation]] = {}
        self._base_counts: dict[str, tuple[int, int]] = {}
        self.pre_review_hook: Callable[[ReviewItem], ExpertAnnotation | None] | None = None
        self._load()

    def _site_path(self, site_id: str) -> Path:
        safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in site_id) or "default"
        return self.data_dir / f"{safe}.jsonl"

    def _load(self) -> None:
        for path in sorted(self.data_dir.glob("*.jsonl")):
            with open(path) as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self._apply(json.loads(line))

    def _apply(self, event: dict) -> None:
        kind = event["type"]
        if kind == "base_counts":
            self._base_counts[event["site_id"]] = (event["upstream"], event["downstream"])
        elif kind == "item":
            payload = dict(event["item"])
            payload["box"] = tuple(payload["box"])
            if payload.get("corrected_box") is not None:
                payload["corrected_box"] = tuple(payload["corrected_box"])
            item = ReviewItem(**payload)
            self._items.setdefault(item.item_id, item)
        elif kind == "annotation":
            ann = ExpertAnnotation(**event["annotation"])
            self._annotations.setdefault(ann.item_id, []).append(ann)
            item = self._items.get(ann.item_id)
            if item is not None and item.status == "Pending":
                self._resolve_in_memory(item, ann, event["status"])

    def _append(self, site_id: str, event: dict) -> None:
        with open(self._site_path(site_id), "a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()

    def record_base_counts(self, site_id: str, upstream: int, downstream: int) -> None:
        with self._lock:
            self._base_counts[site_id] = (upstream, downstream)
            self._append(site_id, {"type": "base_counts", "site_id": site_id, "upstream": upstream, "downstream": downstream})

    def add_items(self, items: Iterable[ReviewItem]) -> list[ReviewItem]:
        """Ingest flagged items, skipping ids already known (idempotent)."""
        added = []
        with self._lock:
            for item in items:
                if item.item_id in self._items:
                    continue
                if not item.created_at:
                    item.created_at = _utcnow()
                self._items[item.item_id] = item
                self._append(item.site_id, {"type": "item", "item": asdict(item)})
                added.append(item)
        if self.pre_review_hook is not None:
            for item in added:
                auto = self.pre_review_hook(item)
                if auto is not None:
                    self.submit_annotation(item.item_id, auto)
        return added

    def get_item(self, item_id: str) -> ReviewItem:
        item = self._items.get(item_id)
        if item is None:
            raise UnknownItemError(item_id)
        return item

    def list_items(self, site_id: str | None = None, status: str | None = None) -> list[ReviewItem]:
        items = [
            i
            for i in self._items.values()
            if (site_id is None or i.site_id == site_id) and (status is None or i.status == status)
        ]
        return sorted(items, key=lambda i: (i.created_at, i.item_id))

    def annotations_for(self, item_id: str) -> list[ExpertAnnotation]:
        return list(self._annotations.get(item_id, []))

    def submit_annotation(
        self, item_id: str, annotation: ExpertAnnotation, resolution: str | None = None
    ) -> ReviewItem:
        """Append the annotation and resolve the item.

        Status becomes Corrected when the annotation changes the box,
        species or count (or ``resolution="correct"``), Rejected when
        ``resolution="reject"``, otherwise Accepted.  Items are one-shot:
        annotating a resolved item raises ItemResolvedError.
        """
        if resolution not in (None, "accept", "correct", "reject"):
            raise ValueError("resolution must be accept, correct or reject")
        with self._lock:
            item = self._items.get(item_id)
            if item is None:
                raise UnknownItemError(item_id)
            if item.status != "Pending":
                raise ItemResolvedError(f"item {item_id} is already {item.status}")
            if annotation.item_id != item_id:
                annotation = ExpertAnnotation(**{**asdict(annotation), "item_id": item_id})
            if not annotation.created_at:
                annotation = ExpertAnnotation(**{**asdict(annotation), "created_at": _utcnow()})
            status = self._resolution_status(annotation, resolution)
            self._annotations.setdefault(item_id, []).append(annotation)
            self._resolve_in_memory(item, annotation, status)
            self._append(
                item.site_id,
                {"type": "annotation", "annotation": asdict(annotation), "status": status},
            )
            return item

    @staticmethod
    def _resolution_status(annotation: ExpertAnnotation, resolution: str | None) -> str:
        if resolution == "reject":
            return "Rejected"
        if resolution == "correct":
            return "Corrected"
        changes = (
            annotation.kind == "Box"
            or bool(annotation.corrected_species)
            or bool(annotation.corrected_count_delta)
        )
        return "Corrected" if changes else "Accepted"

    @staticmethod
    def _resolve_in_memory(item: ReviewItem, annotation: ExpertAnnotation, status: str) -> None:
        item.status = status
        item.resolved_at = annotation.created_at or _utcnow()
        if status == "Corrected":
            if annotation.kind == "Box":
                item.corrected_box = tuple(annotation.payload)
            if annotation.corrected_species:
                item.corrected_species = annotation.corrected_species

    def base_counts(self, site_id: str) -> tuple[int, int]:
        return self._base_counts.get(site_id, (0, 0))

    def corrected_counts(self, site_id: str) -> tuple[int, int, int]:
        """Pipeline counts adjusted by expert corrections.

        Corrected items apply their count delta to the item's crossing
        direction (upstream when the item has none); a rejected
        CountAmbiguity item subtracts its crossing.
        """
        up, down = self._base_counts.get(site_id, (0, 0))
        for item in self._items.values():
            if item.site_id != site_id:
                continue
            if item.status == "Corrected":
                delta = sum(
                    a.corrected_count_delta or 0 for a in self._annotations.get(item.item_id, [])
                )
                if item.direction == Direction.DOWNSTREAM.value:
                    down += delta
                else:
                    up += delta
            elif item.status == "Rejected" and item.reason == "CountAmbiguity":
                if item.direction == Direction.DOWNSTREAM.value:
                    down -= 1
                else:
                    up -= 1
        return up, down, up - down

    def species_legend(self, site_id: str | None = None) -> dict[str, int]:
        """Deterministic species -> MOT class-id mapping for exports."""
        species = sorted(
            {
                i.effective_species()
                for i in self._items.values()
                if i.status in ("Accepted", "Corrected") and (site_id is None or i.site_id == site_id)
            }
        )
        return {name: idx + 1 for idx, name in enumerate(species)}

    def export_training_set(self, path: str | Path, site_id: str | None = None) -> int:
        """MOT CSV of resolved (Accepted/Corrected) items with corrections applied.

        Species labels are encoded in the numeric class column via
        :meth:`species_legend`; the export is deterministic, so re-exporting
        an unchanged store yields identical bytes.  Returns the row count.
        """
        legend = self.species_legend(site_id)
        records = []
        for item in self.list_items(site_id=site_id):
            if item.status not in ("Accepted", "Corrected"):
                continue
            x, y, w, h = item.effective_box()
            records.append(
                MotRecord(
                    frame=item.frame_index + 1,
                    track_id=item.track_id,
                    x=x,
                    y=y,
                    w=w,
                    h=h,
                    conf=1.0,
                    cls=legend[item.effective_species()],
                    visibility=1.0,
                )
            )
        write_mot_csv(path, records)
        return len(records)
