"""Implicit solids, CSG trees, membership oracles, and samplers."""

from .cloud import PointCloud, cloud_membership, load_cloud, save_cloud
from .csg import (
    Complement,
    CsgNode,
    Intersection,
    Leaf,
    Union,
    leaf_count,
    leaf_ids,
    tree_from_dict,
    tree_membership,
    tree_to_dict,
    tree_value,
    validate_tree,
)
from .oracles import CloudOracle, TreeOracle
from .primitives import (
    KINDS,
    Primitive,
    aabb,
    aabbs_overlap,
    box,
    check_primitive_set,
    cylinder,
    index_primitives,
    load_primitives,
    primitive_from_dict,
    primitive_inside,
    primitive_to_dict,
    save_primitives,
    signed_distance,
    sphere,
    surface_area,
)
from .sampling import (
    derive_rng,
    region_box,
    sample_region,
    sample_surface,
    scene_diameter,
    union_box,
)

__all__ = [
    "KINDS",
    "CloudOracle",
    "Complement",
    "CsgNode",
    "Intersection",
    "Leaf",
    "PointCloud",
    "Primitive",
    "TreeOracle",
    "Union",
    "aabb",
    "aabbs_overlap",
    "box",
    "check_primitive_set",
    "cloud_membership",
    "cylinder",
    "derive_rng",
    "index_primitives",
    "leaf_count",
    "leaf_ids",
    "load_cloud",
    "load_primitives",
    "primitive_from_dict",
    "primitive_inside",
    "primitive_to_dict",
    "region_box",
    "sample_region",
    "sample_surface",
    "save_cloud",
    "save_primitives",
    "scene_diameter",
    "signed_distance",
    "sphere",
    "surface_area",
    "tree_from_dict",
    "tree_membership",
    "tree_to_dict",
    "tree_value",
    "union_box",
    "validate_tree",
]
