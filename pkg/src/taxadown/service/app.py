"""FastAPI application exposing the review workflow."""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse

from ..errors import MalformedLabel
from ..taxonomy import parse_label
from .schemas import (
    ClusterInfo,
    DetectionCard,
    DetectionsPage,
    LabelRequest,
    LabelResponse,
    RecomputeRequest,
    RecomputeResponse,
    SessionInfo,
    Suggestion,
    SuggestionsResponse,
)
from .state import NoClusters, RecomputeBusy, SessionState, UnknownReference

MAX_PAGE_SIZE = 500


def create_app(state: SessionState) -> FastAPI:
    app = FastAPI(title="taxadown review API", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def _card(det_id: str, distance: float | None = None) -> DetectionCard:
        det = state.ds.get(det_id)
        out = state.outcomes[det_id]
        override = state.overrides.get(det_id)
        if override is not None:
            label, display = override.render(), override.display()
        else:
            label, display = out.final_label.render(), out.final_label.display()
        return DetectionCard(
            id=det.id,
            image_id=det.image_id,
            label=label,
            display=display,
            decided_by=out.decided_by.value,
            score=out.score,
            distance=distance,
            image_available=state.image_path(det.image_id) is not None,
        )

    @app.get("/api/session", response_model=SessionInfo)
    def session_info():
        return SessionInfo(
            revision=state.revision,
            detections=len(state.ds),
            clusters=len(state.learned_clusters),
            tau=state.cfg.tau,
            overrides=len(state.overrides),
        )

    @app.get("/api/clusters", response_model=list[ClusterInfo])
    def clusters():
        return [
            ClusterInfo(
                label=c.label.render(),
                display=c.label.display(),
                member_count=c.member_count,
                mean_intra_dist=c.mean_intra_dist,
                p95_intra_dist=c.p95_intra_dist,
            )
            for c in state.learned_clusters
        ]

    @app.get("/api/detections", response_model=DetectionsPage)
    def list_detections(
        sort: str = Query(default="input"),
        reference: str | None = Query(default=None),
        page: int = Query(default=1, ge=1),
        page_size: int = Query(default=50, ge=1, le=MAX_PAGE_SIZE),
    ):
        if sort not in ("input", "distance"):
            raise HTTPException(status_code=400, detail=f"unknown sort {sort!r}")
        if sort == "distance":
            if reference is None:
                raise HTTPException(status_code=400, detail="sort=distance needs a reference")
            try:
                point = state.resolve_reference(reference)
            except UnknownReference:
                raise HTTPException(status_code=404, detail=f"unknown reference {reference!r}")
            dists = state.distances_from(point)
            order = np.argsort(dists, kind="stable")
            ordered = [(state.ds.detections[i].id, float(dists[i])) for i in order]
        else:
            ordered = [(d.id, None) for d in state.ds.detections]

        start = (page - 1) * page_size
        window = ordered[start : start + page_size]
        return DetectionsPage(
            revision=state.revision,
            total=len(ordered),
            page=page,
            page_size=page_size,
            reference=reference,
            items=[_card(det_id, dist) for det_id, dist in window],
        )

    @app.get("/api/detections/{det_id}", response_model=DetectionCard)
    def detection(det_id: str):
        if state.ds.get(det_id) is None:
            raise HTTPException(status_code=404, detail=f"unknown detection {det_id!r}")
        return _card(det_id)

    @app.get("/api/detections/{det_id}/suggestions", response_model=SuggestionsResponse)
    def suggestions(det_id: str):
        try:
            ranked = state.suggestions(det_id)
        except UnknownReference:
            raise HTTPException(status_code=404, detail=f"unknown detection {det_id!r}")
        except NoClusters as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        out = state.outcomes[det_id]
        return SuggestionsResponse(
            revision=state.revision,
            detection_id=det_id,
            current_label=out.final_label.render(),
            decided_by=out.decided_by.value,
            already_decided=out.decided_by.value in ("stage1", "stage2", "stage3", "stage5"),
            tau=state.cfg.tau,
            suggestions=[
                Suggestion(
                    label=label.render(),
                    display=label.display(),
                    score=score,
                    hierarchy_match=matches,
                    below_tau=below,
                )
                for label, score, matches, below in ranked
            ],
        )

    @app.post("/api/detections/{det_id}/label", response_model=LabelResponse)
    def accept_label(det_id: str, body: LabelRequest):
        try:
            label = parse_label(body.label)
            revision = state.apply_override(det_id, label)
        except MalformedLabel as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except UnknownReference:
            raise HTTPException(status_code=404, detail=f"unknown detection {det_id!r}")
        return LabelResponse(revision=revision, detection_id=det_id, label=label.render())

    @app.post("/api/recompute", response_model=RecomputeResponse)
    def recompute(body: RecomputeRequest):
        try:
            revision = state.recompute(retrain=body.retrain)
        except RecomputeBusy as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return RecomputeResponse(
            revision=revision,
            clusters=len(state.learned_clusters),
            retrained=body.retrain,
        )

    @app.get("/api/images/{image_id}")
    def image(image_id: str):
        path = state.image_path(image_id)
        if path is None:
            raise HTTPException(status_code=404, detail=f"no image for {image_id!r}")
        return FileResponse(path)

    return app
