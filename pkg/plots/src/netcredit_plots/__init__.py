"""Figure rendering for netcredit CSV exports."""

from .csvtable import FigureError, load_table, require_columns
from .figures import FIGURE_KINDS, FigureSpec, render

__version__ = "0.1.0"
