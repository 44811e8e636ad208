"""Caption-pair similarity sidecar."""

__version__ = "0.1.0"

from .backends import HashEmbeddingBackend, load_backends
from .service import BackendState, create_app

__all__ = ["BackendState", "HashEmbeddingBackend", "create_app", "load_backends"]
