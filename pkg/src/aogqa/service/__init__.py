"""HTTP session service: the live question-answer loop behind a JSON API."""

from .app import create_app

__all__ = ["create_app"]
