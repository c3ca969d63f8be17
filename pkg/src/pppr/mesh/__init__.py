"""Triangle meshes of closed surfaces: structure, generators, refinement, I/O."""

from .core import SurfaceMesh, VertexPatch, ball_patches, build_mesh, vertex_patch
from .generators import (
    chevron_torus_mesh,
    icosahedron,
    projected_icosphere,
    tetrahedron,
    unit_icosphere,
)
from .io import export_mesh, import_mesh
from .refine import bisect_marked, uniform_refine

__all__ = [
    "SurfaceMesh",
    "VertexPatch",
    "ball_patches",
    "bisect_marked",
    "build_mesh",
    "chevron_torus_mesh",
    "export_mesh",
    "icosahedron",
    "import_mesh",
    "projected_icosphere",
    "tetrahedron",
    "uniform_refine",
    "unit_icosphere",
    "vertex_patch",
]
