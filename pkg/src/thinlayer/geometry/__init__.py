"""Boundary geometry, layer construction and tagged meshes."""

from .curves import (
    BoundaryPoint,
    BoundarySpec,
    Disk,
    Ellipse,
    Interval,
    PolarCurve,
    curvature,
    make_spec,
    offset_point,
    spec_params,
)
from .mesh import (
    INTERFACE,
    INTERIOR,
    LAYER,
    OUTER,
    DomainMesh,
    EmbeddingReport,
    build_mesh,
    fiber_sample,
    validate_embedding,
)

__all__ = [
    "BoundaryPoint",
    "BoundarySpec",
    "Disk",
    "DomainMesh",
    "Ellipse",
    "EmbeddingReport",
    "INTERFACE",
    "INTERIOR",
    "Interval",
    "LAYER",
    "OUTER",
    "PolarCurve",
    "build_mesh",
    "curvature",
    "fiber_sample",
    "make_spec",
    "offset_point",
    "spec_params",
    "validate_embedding",
]
