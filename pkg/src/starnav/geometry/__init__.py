"""Planar regions, hulls, clustering and starshaped obstacles."""
from .decompose import convex_decomposition, triangulate
from .hull import cluster_indices, cluster_intersecting, convex_hull, kernel, monotone_chain
from .primitives import (
    Circle,
    ConvexAtom,
    ConvexPolygon,
    DiscPolygon,
    Polygon,
    atom_distance,
    clearance,
    contains,
    distance,
    inflate,
    intersects,
    region_distance,
)
from .star import RadialIndex, StarObstacle, from_atom, from_region, star_distance, starshaped_hull

__all__ = [
    "Circle", "ConvexAtom", "ConvexPolygon", "DiscPolygon", "Polygon", "RadialIndex", "StarObstacle",
    "atom_distance", "clearance", "cluster_indices", "cluster_intersecting", "contains", "convex_decomposition",
    "convex_hull", "distance", "from_atom", "from_region", "inflate", "intersects", "kernel", "monotone_chain",
    "region_distance", "star_distance", "starshaped_hull", "triangulate",
]
