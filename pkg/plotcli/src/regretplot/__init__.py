"""Panel plots of regret curves with shaded standard-error bands."""

__version__ = "0.1.0"

from .render import CurveData, Panel, SchemaError, build_figure, read_curve_csv, render

__all__ = [
    "__version__",
    "CurveData",
    "Panel",
    "SchemaError",
    "build_figure",
    "read_curve_csv",
    "render",
]
