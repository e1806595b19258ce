"""Figure rendering for experiment metrics CSVs."""

from .render import FIGURES, FORMATS, REQUIRED_COLUMNS, FigureRequest, load_metrics, render

__version__ = "0.1.0"
