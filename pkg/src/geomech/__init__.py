"""Lagrangian and Hamiltonian mechanics on coordinate charts.

Submodules
----------
calc         forward-mode derivatives of scalar fields and maps
symplin      linear symplectic algebra
geometry     metrics, musical maps, Christoffel symbols
lagrangian   Lagrangian systems and Euler-Lagrange integration
legendre     fibrewise Legendre transform and convex duals
hamiltonian  Hamiltonian flows, brackets, forms and lifts
noether      symmetries, conserved charges and their transfer
scenarios    built-in systems, verification matrices, run artifacts
"""

__version__ = "0.1.0"

from . import calc, errors, geometry, hamiltonian, lagrangian, legendre, noether, symplin  # noqa: E402
from . import scenarios  # noqa: E402

__all__ = ["calc", "errors", "geometry", "hamiltonian", "lagrangian", "legendre", "noether",
           "scenarios", "symplin", "__version__"]
