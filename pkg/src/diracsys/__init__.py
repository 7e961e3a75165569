"""Linear Dirac structures, port-Hamiltonian composition and DAE simulation."""

from .dirac import Bivector, LinearStructure, TwoForm
from .iostruct import IOStructure
from .subspace import Subspace
from .transfer import LinearMapSpec

__all__ = ["Bivector", "IOStructure", "LinearMapSpec", "LinearStructure", "Subspace", "TwoForm"]
__version__ = "0.1.0"
