"""HTTP front end for the simulator, controller and identification routines."""
from .app import app

__all__ = ["app"]
