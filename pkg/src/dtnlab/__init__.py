"""Discrete Morse and Maslov index identities for Schrodinger operators on grid domains."""
from .errors import ASingular, ConfigError, DomainError, Indeterminate, NumericError
from .linalg import Inertia, eig_inertia, eigs, ldlt_inertia, schur_complement

__version__ = "0.1.0"

__all__ = [
    "ASingular",
    "ConfigError",
    "DomainError",
    "Indeterminate",
    "Inertia",
    "NumericError",
    "eig_inertia",
    "eigs",
    "ldlt_inertia",
    "schur_complement",
    "__version__",
]
