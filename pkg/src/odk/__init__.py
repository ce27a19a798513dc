"""Density of finitely generated subgroups and orbits of abelian linear groups."""

from odk._accel import USE_NUMBA
from odk.errors import OdkError

__version__ = "0.1.0"

__all__ = ["OdkError", "USE_NUMBA", "__version__"]
