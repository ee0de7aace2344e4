"""Inside/outside oracles for the target solid.

The pipeline only ever asks one question of the target: is this point
inside?  Two sources answer it -- a ground-truth CSG tree (exact, used for
fixtures and evaluation) and an oriented point cloud (the lossy input of
the compression problem).  Both are deterministic and safe to query
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ..errors import UnsupportedOracleError
from .cloud import PointCloud
from .csg import CsgNode, tree_membership
from .primitives import index_primitives


@dataclass(frozen=True, eq=False)
class TreeOracle:
    """Membership of a known CSG tree over a known primitive set."""

    tree: CsgNode
    primitives: tuple

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))
        object.__setattr__(self, "_by_id", index_primitives(self.primitives))

    def inside(self, points) -> bool | np.ndarray:
        return tree_membership(self.tree, self._by_id, points)

    def surface_distance(self, points) -> np.ndarray:
        """Lower bound on the distance to the solid's surface."""
        from .csg import tree_value

        return np.abs(np.atleast_1d(tree_value(self.tree, self._by_id, points)))


@dataclass(frozen=True, eq=False)
class CloudOracle:
    """Nearest-neighbour half-space membership over an oriented cloud."""

    cloud: PointCloud

    def __post_init__(self):
        if len(self.cloud) == 0:
            raise UnsupportedOracleError("point cloud oracle needs a non-empty cloud")
        if self.cloud.normals is None:
            raise UnsupportedOracleError("point cloud oracle needs outward normals")
        object.__setattr__(self, "_kdtree", cKDTree(self.cloud.points))

    def inside(self, points) -> bool | np.ndarray:
        p = np.asarray(points, dtype=float)
        single = p.ndim == 1
        pts = np.atleast_2d(p)
        _, idx = self._kdtree.query(pts, k=1)
        side = np.einsum(
            "ij,ij->i", pts - self.cloud.points[idx], self.cloud.normals[idx]
        )
        inside = side < 0
        return bool(inside[0]) if single else inside

    def surface_distance(self, points) -> np.ndarray:
        """Distance to the nearest surface sample."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        dist, _ = self._kdtree.query(pts, k=1)
        return np.asarray(dist)
