"""qodfigures: figure rendering for qodsim CSV tables and QF01 snapshots."""

from .qf01 import FieldSnapshot, QF01FormatError, read_qf01, write_qf01
from .recipes import FigureRecipe, RecipeError, render, scene_outlines

__version__ = "0.1.0"
