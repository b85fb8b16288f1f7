"""Figure generation from exported simulation trace CSVs."""

from .figures import FIGURE_IDS, FigureSpec, MissingColumnError, render, render_all

__version__ = "0.1.0"
