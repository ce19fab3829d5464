"""Figure rendering for the antisync simulator's CSV outputs."""

from .render import FIGURE_COLUMNS, FigureSpec, RenderError, render

__version__ = "0.1.0"
