"""Just-in-time cluster-state generation with ageing qubits.

Closed-form T2 thresholds for 1D/2D/3D cluster architectures, Monte Carlo
buffer and reservoir simulations, and graph-state checks of the
vertical-edge construction.  All times are in units of the step time.
"""

from jitcluster.errors import CapacityError, ConstructionUnsupportedError, SearchCapError
from jitcluster.gates import EntanglingProcedure, catalog, get_procedure, supports_2d_construction

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "ConstructionUnsupportedError",
    "EntanglingProcedure",
    "SearchCapError",
    "catalog",
    "get_procedure",
    "supports_2d_construction",
]
