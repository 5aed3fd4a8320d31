"""Figure rendering for hbl run artifacts. Pure display: every number comes
from the CSV/JSON files, nothing is recomputed."""

from .render import FigureSpec, RunData, load_run, render

__all__ = ["FigureSpec", "RunData", "load_run", "render"]

__version__ = "0.1.0"
