"""Figure rendering for experiment CSV outputs.

This package is a strict reader: it renders the CSV files written by
the simulation command line into figures and never recomputes any
simulated quantity. The CSV schemas are the only coupling between the
two packages.
"""

from .figures import KINDS, PlotSpec, plot
from .io import SchemaError, Table, read_table

__all__ = ["KINDS", "PlotSpec", "SchemaError", "Table", "plot", "read_table"]

__version__ = "0.1.0"
