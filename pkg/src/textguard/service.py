"""HTTP serve mode for the defense framework.

Wraps a loaded DefenseConfig behind POST /v1/classify so multiple
clients can query the defended classifier without touching model files.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .defense import DefenseConfig, defend_predict


class ClassifyRequest(BaseModel):
    text: str = Field(min_length=1)


class ClassifyResponse(BaseModel):
    probs: list[float]
    route: str
    transforms: list[str]
    anomaly_score: float


class HealthResponse(BaseModel):
    status: str
    version: str


def create_app(config: DefenseConfig) -> FastAPI:
    app = FastAPI(title="textguard defense", version=__version__)

    @app.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/v1/classify", response_model=ClassifyResponse)
    def classify(request: ClassifyRequest) -> ClassifyResponse:
        if not request.text.strip():
            raise HTTPException(status_code=400, detail="text is empty after trimming")
        probs, record = defend_predict(config, request.text)
        return ClassifyResponse(
            probs=probs,
            route=record.route,
            transforms=list(record.transform_ids),
            anomaly_score=record.score,
        )

    return app
