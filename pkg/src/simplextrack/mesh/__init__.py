from .cube import (
    CubeType,
    UnitCubeTables,
    enumerate_unique_types,
    format_corner,
    format_staircase,
    staircase_triangulate,
    subdivide_unit_cube,
)
from .extruded import ExtrudedPrismaticMesh, UnstructuredBaseMesh
from .handle import ElementHandle, InvalidHandle, Kind
from .regular import RegularSpacetimeMesh

__all__ = [
    "CubeType",
    "ElementHandle",
    "ExtrudedPrismaticMesh",
    "InvalidHandle",
    "Kind",
    "RegularSpacetimeMesh",
    "UnitCubeTables",
    "UnstructuredBaseMesh",
    "enumerate_unique_types",
    "format_corner",
    "format_staircase",
    "staircase_triangulate",
    "subdivide_unit_cube",
]
