"""FastAPI application implementing the backend wire protocol.

POST /v1/predict, /v1/mlm, and /v1/translate behave identically in stub
and real mode; only the backing computation differs. Malformed requests
come back as 400 with a machine-readable reason, unconfigured
capabilities as 501.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .config import MODE_REAL, SidecarConfig
from .stub import stub_mlm, stub_predict, stub_translate


class PredictRequest(BaseModel):
    texts: list[str] = Field(min_length=1)


class PredictResponse(BaseModel):
    probs: list[list[float]]


class MlmRequest(BaseModel):
    text: str = Field(min_length=1)
    mask_indices: list[int] = Field(min_length=1)
    top_k: int = Field(ge=1, le=50)


class MlmResponse(BaseModel):
    suggestions: list[list[str]]


class TranslateRequest(BaseModel):
    text: str = Field(min_length=1)
    pivot: str = Field(default="de", min_length=2, max_length=8)


class TranslateResponse(BaseModel):
    text: str


class HealthResponse(BaseModel):
    status: str
    mode: str
    capabilities: list[str]
    version: str


def create_app(config: SidecarConfig | None = None) -> FastAPI:
    config = config or SidecarConfig()
    backends = None
    if config.mode == MODE_REAL:
        from .real import RealBackends

        backends = RealBackends(config)

    app = FastAPI(title="textguard sidecar", version=__version__)

    @app.exception_handler(RequestValidationError)
    async def malformed_request(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": "malformed request", "detail": exc.errors()},
        )

    def require(capability: str) -> None:
        if capability not in config.capabilities:
            raise HTTPException(status_code=501,
                                detail=f"capability {capability!r} not configured")

    @app.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", mode=config.mode,
                              capabilities=list(config.capabilities),
                              version=__version__)

    @app.post("/v1/predict", response_model=PredictResponse)
    def predict(request: PredictRequest) -> PredictResponse:
        require("predict")
        if len(request.texts) > config.max_batch:
            raise HTTPException(
                status_code=400,
                detail=f"batch of {len(request.texts)} exceeds max_batch={config.max_batch}",
            )
        if backends is not None:
            return PredictResponse(probs=backends.predict(request.texts))
        return PredictResponse(probs=stub_predict(request.texts, config.stub_num_classes))

    @app.post("/v1/mlm", response_model=MlmResponse)
    def mlm(request: MlmRequest) -> MlmResponse:
        require("mlm")
        n_tokens = len(request.text.split())
        bad = [i for i in request.mask_indices if not 0 <= i < n_tokens]
        if bad:
            raise HTTPException(
                status_code=400,
                detail=f"mask indices {bad} out of range for {n_tokens} tokens",
            )
        if backends is not None:
            return MlmResponse(
                suggestions=backends.mlm(request.text, request.mask_indices, request.top_k)
            )
        return MlmResponse(
            suggestions=stub_mlm(request.text, request.mask_indices, request.top_k)
        )

    @app.post("/v1/translate", response_model=TranslateResponse)
    def translate(request: TranslateRequest) -> TranslateResponse:
        require("translate")
        if backends is not None:
            return TranslateResponse(text=backends.translate(request.text, request.pivot))
        return TranslateResponse(text=stub_translate(request.text, request.pivot))

    return app
