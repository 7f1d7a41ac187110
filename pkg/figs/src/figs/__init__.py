"""figs: post-hoc figure generation from simulation CSV files."""

from .render import FigureRequest, SchemaError, render

__all__ = ["FigureRequest", "SchemaError", "render"]
