"""dkwfigs: batch figure rendering for dkwlab experiment CSVs."""

__version__ = "0.1.0"

from .render import (FigureError, FigureSpec, load_spec, render,
                     spec_from_dict)
