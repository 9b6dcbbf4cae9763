"""Petrov-Galerkin finite elements on curved 2D domains.

Straight-edged triangle meshes with trial-space boundary nodes relocated
onto the true curved boundary; standard Lagrange test space.
"""

__version__ = "0.1.0"
