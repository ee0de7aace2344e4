"""Boolean expression trees over implicit primitives.

A tree value at a point composes the signed distances of the leaves with
min (union), max (intersection), and negation (complement).  The composed
value keeps the sign contract of the primitives -- negative means inside --
so membership is simply ``value < 0``; the value itself is only a bound on
the true distance.  A point with value exactly zero is classified outside,
which keeps inside sets open and sampling stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import StructuralError
from .primitives import Primitive, index_primitives, signed_distance


@dataclass(frozen=True)
class Leaf:
    prim: str


@dataclass(frozen=True)
class Union:
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise StructuralError("union needs at least two children")


@dataclass(frozen=True)
class Intersection:
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise StructuralError("intersection needs at least two children")


@dataclass(frozen=True)
class Complement:
    child: object


CsgNode = Leaf | Union | Intersection | Complement


def leaf_count(tree: CsgNode) -> int:
    """Number of Leaf nodes, the tree-size measure used throughout."""
    if isinstance(tree, Leaf):
        return 1
    if isinstance(tree, Complement):
        return leaf_count(tree.child)
    return sum(leaf_count(c) for c in tree.children)


def leaf_ids(tree: CsgNode) -> set[str]:
    if isinstance(tree, Leaf):
        return {tree.prim}
    if isinstance(tree, Complement):
        return leaf_ids(tree.child)
    out: set[str] = set()
    for c in tree.children:
        out |= leaf_ids(c)
    return out


def validate_tree(tree: CsgNode, primitives) -> None:
    """Raise StructuralError if a leaf id does not resolve in the set."""
    by_id = primitives if isinstance(primitives, dict) else index_primitives(primitives)
    missing = leaf_ids(tree) - set(by_id)
    if missing:
        raise StructuralError(f"tree references unknown primitives: {sorted(missing)}")


def tree_value(tree: CsgNode, primitives, point) -> float | np.ndarray:
    """Composed implicit value at ``point`` (shape (3,) or (N, 3))."""
    by_id = primitives if isinstance(primitives, dict) else index_primitives(primitives)
    p = np.asarray(point, dtype=float)
    single = p.ndim == 1
    pts = np.atleast_2d(p)
    v = _eval(tree, by_id, pts)
    return float(v[0]) if single else v


def _eval(node: CsgNode, by_id: dict[str, Primitive], pts: np.ndarray) -> np.ndarray:
    if isinstance(node, Leaf):
        prim = by_id.get(node.prim)
        if prim is None:
            raise StructuralError(f"tree references unknown primitive {node.prim!r}")
        return np.asarray(signed_distance(prim, pts))
    if isinstance(node, Union):
        return np.minimum.reduce([_eval(c, by_id, pts) for c in node.children])
    if isinstance(node, Intersection):
        return np.maximum.reduce([_eval(c, by_id, pts) for c in node.children])
    if isinstance(node, Complement):
        return -_eval(node.child, by_id, pts)
    raise StructuralError(f"unknown tree node {node!r}")


def tree_membership(tree: CsgNode, primitives, point) -> bool | np.ndarray:
    """True where the point is strictly inside the solid the tree describes."""
    v = tree_value(tree, primitives, point)
    return v < 0 if isinstance(v, np.ndarray) else v < 0


# ---------------------------------------------------------------------------
# JSON encoding: {"op": "union"|"inter"|"comp"|"prim", "children": [...],
#                 "prim": id}
# ---------------------------------------------------------------------------

def tree_to_dict(tree: CsgNode) -> dict:
    if isinstance(tree, Leaf):
        return {"op": "prim", "prim": tree.prim}
    if isinstance(tree, Union):
        return {"op": "union", "children": [tree_to_dict(c) for c in tree.children]}
    if isinstance(tree, Intersection):
        return {"op": "inter", "children": [tree_to_dict(c) for c in tree.children]}
    if isinstance(tree, Complement):
        return {"op": "comp", "children": [tree_to_dict(tree.child)]}
    raise StructuralError(f"unknown tree node {tree!r}")


def tree_from_dict(obj: dict) -> CsgNode:
    op = obj.get("op")
    if op == "prim":
        if "prim" not in obj:
            raise StructuralError("prim node without 'prim' id")
        return Leaf(str(obj["prim"]))
    children = [tree_from_dict(c) for c in obj.get("children", ())]
    if op == "union":
        return Union(tuple(children))
    if op == "inter":
        return Intersection(tuple(children))
    if op == "comp":
        if len(children) != 1:
            raise StructuralError("comp node needs exactly one child")
        return Complement(children[0])
    raise StructuralError(f"unknown tree op {op!r}")
