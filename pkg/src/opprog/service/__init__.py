"""HTTP backend for the interactive annotation and validation platform."""
from .config import ServiceConfig
from .state import AnnotationStore, ServiceError
from .app import create_app

__all__ = ["ServiceConfig", "AnnotationStore", "ServiceError", "create_app"]
