"""Pydantic request/response models for the review API."""

from __future__ import annotations

from pydantic import BaseModel, Field


class SessionInfo(BaseModel):
    revision: int
    detections: int
    clusters: int
    tau: float
    overrides: int


class ClusterInfo(BaseModel):
    label: str
    display: str
    member_count: int
    mean_intra_dist: float
    p95_intra_dist: float


class DetectionCard(BaseModel):
    id: str
    image_id: str
    label: str
    display: str
    decided_by: str
    score: float | None = None
    distance: float | None = None
    image_available: bool = False


class DetectionsPage(BaseModel):
    revision: int
    total: int
    page: int
    page_size: int
    reference: str | None = None
    items: list[DetectionCard]


class Suggestion(BaseModel):
    label: str
    display: str
    score: float
    hierarchy_match: bool
    below_tau: bool


class SuggestionsResponse(BaseModel):
    revision: int
    detection_id: str
    current_label: str
    decided_by: str
    already_decided: bool
    tau: float
    suggestions: list[Suggestion]


class LabelRequest(BaseModel):
    label: str = Field(min_length=1)


class LabelResponse(BaseModel):
    revision: int
    detection_id: str
    label: str


class RecomputeRequest(BaseModel):
    retrain: bool = False


class RecomputeResponse(BaseModel):
    revision: int
    clusters: int
    retrained: bool
