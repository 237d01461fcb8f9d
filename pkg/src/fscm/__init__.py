"""Fourier singular complement solver for the Laplacian on a prism.

The cross-section is a polygon with one reentrant corner; the 3D Dirichlet
problem is reduced to screened-Poisson modes by a sine expansion along the
prism axis, and each mode is solved with an explicit singular complement so
that uniform meshes recover the optimal O(h + 1/N) rate.
"""

from .errors import (CornerSingularity, DegenerateTriangle, FscmError,
                     NoConvergence, NotIntegrable, OutsideDomain,
                     OutsideWedge, UnsupportedGeometry)
from .fem import FemSystem, assemble, load_vector, solve
from .fourier import (FscmSolution, ModeProjector, PrismSpec, fscm_solve,
                      parseval_residual)
from .geometry import PolygonalSection, make_l_section
from .mesh import TriMesh, load_mesh, rect_mesh, save_mesh, triangulate
from .scm import ModeSolution, ScmConfig, extract_coefficient, fem_solve, scm_solve
from .singular import SingularBasis, build_singular_basis

__version__ = "0.1.0"

__all__ = [
    "CornerSingularity",
    "DegenerateTriangle",
    "FemSystem",
    "FscmError",
    "FscmSolution",
    "ModeProjector",
    "ModeSolution",
    "NoConvergence",
    "NotIntegrable",
    "OutsideDomain",
    "OutsideWedge",
    "PolygonalSection",
    "PrismSpec",
    "ScmConfig",
    "SingularBasis",
    "TriMesh",
    "UnsupportedGeometry",
    "assemble",
    "build_singular_basis",
    "extract_coefficient",
    "fem_solve",
    "fscm_solve",
    "load_mesh",
    "load_vector",
    "make_l_section",
    "parseval_residual",
    "rect_mesh",
    "save_mesh",
    "scm_solve",
    "solve",
    "triangulate",
    "__version__",
]
