"""HTTP facade over the analyzer; the CLI is a thin client of this service."""

from .app import app, create_app

__all__ = ["app", "create_app"]
