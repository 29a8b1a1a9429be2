"""Finite-volume simulator for a chemotaxis-Stokes system with signal consumption,
logistic growth and a Dirichlet signal boundary, plus estimate checkers."""

from .errors import (BlowupSuspected, ChemostokesError, ContractError, DiagnosticError,
                     NumericalFailure, SnapshotFormatError, SolverError, ValidationError)
from .grid import GridSpec, ScalarField, VectorField
from .model import InitialData, PhysicalParams, SchemeConfig, SimState
from .regularization import RegParams

__version__ = "0.1.0"
