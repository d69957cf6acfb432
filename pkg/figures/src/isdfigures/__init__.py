"""Plotting of isdsim CSV outputs: ordered-error curves, shift-detuning heat
maps, excitation curves and validation-ratio scatter plots.

Only the documented CSV dialect is consumed; all numbers come from the
simulation toolkit.  Rendering is deterministic: the same inputs produce
byte-identical image files.
"""

__version__ = "0.1.0"

from .csvio import MissingColumn, read_table
from .render import FigureSpec, render

__all__ = ["FigureSpec", "MissingColumn", "read_table", "render", "__version__"]
