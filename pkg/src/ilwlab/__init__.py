"""Numerical laboratory for the intermediate long wave (ILW) equation."""

from . import grid, linear_dispersion, normal_form, paradiff, solver, symbols, vectorfield
from ._accel import backend
from .grid import DyadicIndex, Field, GridSpec
from .normal_form import NormalForm
from .solver import Datum, NumericalGuardError, SimConfig, SimTrace, evolve

__version__ = "0.1.0"

__all__ = [
    "grid",
    "linear_dispersion",
    "normal_form",
    "paradiff",
    "solver",
    "symbols",
    "vectorfield",
    "backend",
    "DyadicIndex",
    "Field",
    "GridSpec",
    "NormalForm",
    "Datum",
    "NumericalGuardError",
    "SimConfig",
    "SimTrace",
    "evolve",
]
