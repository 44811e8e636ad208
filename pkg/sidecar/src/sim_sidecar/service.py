"""HTTP service: POST /similarity scores a caption pair with two encoders;
GET /health reports readiness, the pinned model ids, and the score mapping."""

from __future__ import annotations

import threading
from contextlib import asynccontextmanager

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .backends import load_backends

MAX_CAPTION_CHARS = 4096
SCORE_MAPPING = "cosine of mean-pooled embeddings, mapped linearly from [-1, 1] to [0, 1]"


class SimilarityRequest(BaseModel):
    caption1: str
    caption2: str


class SimilarityResponse(BaseModel):
    s_base: float
    s_large: float
    model_ids: list[str]


class BackendState:
    """Holds the (base, large) encoder pair; not ready until loaded.

    ``inference_lock`` serializes embedding calls: request handling is
    concurrent, model inference is not assumed thread-safe.
    """

    def __init__(self):
        self.base = None
        self.large = None
        self._lock = threading.Lock()
        self.inference_lock = threading.Lock()

    @property
    def ready(self) -> bool:
        return self.base is not None and self.large is not None

    def load(self, kind: str, **kwargs) -> None:
        base, large = load_backends(kind, **kwargs)
        with self._lock:
            self.base, self.large = base, large


def _mapped_cosine(a: np.ndarray, b: np.ndarray) -> float:
    norm_a, norm_b = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if norm_a == 0.0 and norm_b == 0.0:
        cosine = 1.0  # degenerate pair of empty texts: treat as identical
    elif norm_a == 0.0 or norm_b == 0.0:
        cosine = 0.0
    else:
        cosine = float(np.dot(a, b) / (norm_a * norm_b))
    score = (cosine + 1.0) / 2.0
    return min(1.0, max(0.0, score))


def create_app(state: BackendState | None = None, backend_kind: str = "auto",
               load_on_startup: bool = True, **backend_kwargs) -> FastAPI:
    backends = state or BackendState()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if load_on_startup and not backends.ready:
            backends.load(backend_kind, **backend_kwargs)
        yield

    app = FastAPI(title="similarity sidecar", lifespan=lifespan)
    app.state.backends = backends

    def _require_ready() -> None:
        if not app.state.backends.ready:
            raise HTTPException(status_code=503, detail="models are still loading")

    @app.get("/health")
    def health():
        backends = app.state.backends
        if not backends.ready:
            return JSONResponse(status_code=503, content={"ready": False})
        return {
            "ready": True,
            "model_ids": [backends.base.model_id, backends.large.model_id],
            "score_mapping": SCORE_MAPPING,
            "max_caption_chars": MAX_CAPTION_CHARS,
        }

    @app.post("/similarity", response_model=SimilarityResponse)
    def similarity(request: SimilarityRequest):
        _require_ready()
        for name, caption in (("caption1", request.caption1), ("caption2", request.caption2)):
            if not caption.strip():
                raise HTTPException(status_code=400, detail=f"{name} is empty")
            if len(caption) > MAX_CAPTION_CHARS:
                raise HTTPException(
                    status_code=400,
                    detail=f"{name} exceeds {MAX_CAPTION_CHARS} characters",
                )
        backends = app.state.backends
        with backends.inference_lock:
            s_base = _mapped_cosine(
                backends.base.embed(request.caption1), backends.base.embed(request.caption2)
            )
            s_large = _mapped_cosine(
                backends.large.embed(request.caption1), backends.large.embed(request.caption2)
            )
        return SimilarityResponse(
            s_base=s_base,
            s_large=s_large,
            model_ids=[backends.base.model_id, backends.large.model_id],
        )

    return app
