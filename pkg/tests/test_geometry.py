"""Tests for implicit primitives, CSG trees, oracles, and samplers."""

import numpy as np
import numpy.testing as npt
import pytest

from csgcompress.errors import StructuralError, UnsupportedOracleError
from csgcompress.geometry import (
    Complement,
    Intersection,
    Leaf,
    PointCloud,
    Primitive,
    Union,
    aabb,
    box,
    check_primitive_set,
    cloud_membership,
    cylinder,
    leaf_count,
    load_cloud,
    load_primitives,
    sample_region,
    sample_surface,
    save_cloud,
    save_primitives,
    signed_distance,
    sphere,
    tree_from_dict,
    tree_membership,
    tree_to_dict,
    tree_value,
)


def _rot_z(angle):
    """Quaternion (w, x, y, z) for a rotation about +z."""
    return np.array([np.cos(angle / 2), 0.0, 0.0, np.sin(angle / 2)])


# ---------------------------------------------------------------------------
# Signed distances
# ---------------------------------------------------------------------------

class TestSignedDistance:
    def test_unit_sphere_center(self):
        npt.assert_allclose(signed_distance(sphere("A", (0, 0, 0), 1.0), (0, 0, 0)), -1.0)

    def test_unit_sphere_surface(self):
        npt.assert_allclose(signed_distance(sphere("A", (0, 0, 0), 1.0), (1, 0, 0)), 0.0)

    def test_box_face_distance(self):
        b = box("B", (0, 0, 0), (1, 1, 1))
        npt.assert_allclose(signed_distance(b, (3, 0, 0)), 2.0)

    def test_box_corner_distance_exact(self):
        b = box("B", (0, 0, 0), (1, 1, 1))
        npt.assert_allclose(signed_distance(b, (2, 2, 2)), np.sqrt(3.0))

    def test_cylinder_outside_corner(self):
        c = cylinder("C", (0, 0, 0), 1.0, 1.0)
        # Beyond both the rim and the cap: exact Euclidean corner distance.
        npt.assert_allclose(signed_distance(c, (2, 0, 2)), np.sqrt(2.0))

    def test_cylinder_side(self):
        c = cylinder("C", (0, 0, 0), 1.0, 2.0)
        npt.assert_allclose(signed_distance(c, (3, 0, 0)), 2.0)

    def test_inside_signs(self):
        for p in (sphere("A", (0, 0, 0), 1.0),
                  box("B", (0, 0, 0), (1, 2, 3)),
                  cylinder("C", (0, 0, 0), 1.0, 1.0)):
            assert signed_distance(p, (0, 0, 0)) < 0

    def test_translation(self):
        s = sphere("A", (5, 0, 0), 1.0)
        npt.assert_allclose(signed_distance(s, (5, 0, 0)), -1.0)
        npt.assert_allclose(signed_distance(s, (7, 0, 0)), 1.0)

    def test_rotation_box(self):
        # Box rotated 90 degrees about z: half-extents (2, 1, 1) become (1, 2, 1).
        b = box("B", (0, 0, 0), (2, 1, 1), rotation=_rot_z(np.pi / 2))
        npt.assert_allclose(signed_distance(b, (0, 1.5, 0)), -0.5, atol=1e-12)
        npt.assert_allclose(signed_distance(b, (1.5, 0, 0)), 0.5, atol=1e-12)

    def test_batch_shape(self):
        s = sphere("A", (0, 0, 0), 1.0)
        pts = np.array([[0, 0, 0], [2, 0, 0], [0.5, 0, 0]])
        d = signed_distance(s, pts)
        assert d.shape == (3,)
        npt.assert_allclose(d, [-1.0, 1.0, -0.5])

    def test_sphere_sign_agrees_with_analytic_test(self):
        # Containment via |p - c| < r must match the sign on 10^4 random points.
        rng = np.random.default_rng(7)
        c = np.array([0.3, -0.2, 0.5])
        s = sphere("A", c, 0.8)
        pts = rng.uniform(-2, 2, size=(10_000, 3))
        analytic = np.linalg.norm(pts - c, axis=1) < 0.8
        assert np.array_equal(signed_distance(s, pts) < 0, analytic)


class TestPrimitiveValidation:
    def test_nonpositive_params_rejected(self):
        with pytest.raises(ValueError):
            sphere("A", (0, 0, 0), 0.0)
        with pytest.raises(ValueError):
            box("B", (0, 0, 0), (1, -1, 1))
        with pytest.raises(ValueError):
            cylinder("C", (0, 0, 0), 1.0, 0.0)

    def test_non_unit_quaternion_rejected(self):
        with pytest.raises(ValueError):
            Primitive("A", "sphere", np.zeros(3), np.array([1.0, 0.0, 0.0, 1.0]),
                      {"radius": 1.0})

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            check_primitive_set([sphere("A", (0, 0, 0), 1), sphere("A", (3, 0, 0), 1)])

    def test_aabb_rotated_box(self):
        b = box("B", (1, 0, 0), (2, 1, 1), rotation=_rot_z(np.pi / 2))
        lo, hi = aabb(b)
        npt.assert_allclose(lo, [0, -2, -1], atol=1e-12)
        npt.assert_allclose(hi, [2, 2, 1], atol=1e-12)


# ---------------------------------------------------------------------------
# Tree membership
# ---------------------------------------------------------------------------

class TestTreeMembership:
    A = sphere("A", (0, 0, 0), 1.0)
    B = sphere("B", (1.0, 0, 0), 1.0)
    FAR = sphere("F", (10, 0, 0), 1.0)

    def test_union_inside_one(self):
        tree = Union((Leaf("A"), Leaf("B")))
        assert tree_membership(tree, [self.A, self.B], (-0.5, 0, 0))

    def test_complement_flips(self):
        tree = Complement(Leaf("A"))
        assert not tree_membership(tree, [self.A], (0, 0, 0))
        assert tree_membership(tree, [self.A], (5, 0, 0))

    def test_disjoint_intersection_empty(self):
        tree = Intersection((Leaf("A"), Leaf("F")))
        for p in [(0, 0, 0), (10, 0, 0), (5, 0, 0)]:
            assert not tree_membership(tree, [self.A, self.FAR], p)

    def test_surface_counts_as_outside(self):
        assert not tree_membership(Union((Leaf("A"), Leaf("B"))),
                                   [self.A, self.B], (-1.0, 0, 0))

    def test_unknown_leaf_raises(self):
        with pytest.raises(StructuralError):
            tree_membership(Leaf("Z"), [self.A], (0, 0, 0))

    def test_de_morgan(self):
        rng = np.random.default_rng(3)
        pts = rng.uniform(-3, 3, size=(2000, 3))
        prims = [self.A, self.B]
        lhs = tree_membership(Complement(Union((Leaf("A"), Leaf("B")))), prims, pts)
        rhs = tree_membership(
            Intersection((Complement(Leaf("A")), Complement(Leaf("B")))), prims, pts
        )
        assert np.array_equal(lhs, rhs)

    def test_leaf_count(self):
        assert leaf_count(Leaf("A")) == 1
        # A u (B n !D) u (C n D) u (!D n E n !F)
        tree = Union((
            Leaf("A"),
            Intersection((Leaf("B"), Complement(Leaf("D")))),
            Intersection((Leaf("C"), Leaf("D"))),
            Intersection((Complement(Leaf("D")), Leaf("E"), Complement(Leaf("F")))),
        ))
        assert leaf_count(tree) == 8

    def test_tree_json_round_trip(self):
        tree = Union((
            Leaf("A"),
            Intersection((Leaf("B"), Complement(Leaf("D")))),
        ))
        assert tree_from_dict(tree_to_dict(tree)) == tree

    def test_bad_arity(self):
        with pytest.raises(StructuralError):
            Union((Leaf("A"),))
        with pytest.raises(StructuralError):
            tree_from_dict({"op": "comp", "children": []})


# ---------------------------------------------------------------------------
# Region sampling
# ---------------------------------------------------------------------------

class TestSampleRegion:
    def test_inside_sphere(self):
        s = sphere("A", (0, 0, 0), 1.0)
        pts = sample_region([s], [], 100, seed=1)
        assert pts.shape == (100, 3)
        assert np.all(signed_distance(s, pts) < 0)

    def test_contradictory_region_empty(self):
        s = sphere("A", (0, 0, 0), 1.0)
        assert sample_region([s], [s], 100, seed=1).shape == (0, 3)

    def test_lens_region(self):
        a = sphere("A", (0, 0, 0), 1.0)
        b = sphere("B", (1, 0, 0), 1.0)
        pts = sample_region([a, b], [], 200, seed=2)
        assert pts.shape[0] == 200
        assert np.all(signed_distance(a, pts) < 0)
        assert np.all(signed_distance(b, pts) < 0)

    def test_disjoint_boxes_return_empty(self):
        a = sphere("A", (0, 0, 0), 1.0)
        b = sphere("B", (10, 0, 0), 1.0)
        assert sample_region([a, b], [], 50, seed=3).shape == (0, 3)

    def test_reproducible(self):
        s = sphere("A", (0, 0, 0), 1.0)
        p1 = sample_region([s], [], 64, seed=9)
        p2 = sample_region([s], [], 64, seed=9)
        npt.assert_array_equal(p1, p2)

    def test_prefix_property(self):
        # More requested points extend, never reshuffle, the accepted stream.
        s = sphere("A", (0, 0, 0), 1.0)
        small = sample_region([s], [], 32, seed=4)
        large = sample_region([s], [], 64, seed=4)
        npt.assert_array_equal(large[:32], small)


# ---------------------------------------------------------------------------
# Surface sampling and the cloud oracle
# ---------------------------------------------------------------------------

class TestSampleSurface:
    def test_unit_sphere_on_surface(self):
        s = sphere("A", (0, 0, 0), 1.0)
        cloud = sample_surface(Leaf("A"), [s], 1000, seed=5)
        assert len(cloud) == 1000
        npt.assert_allclose(signed_distance(s, cloud.points), 0.0, atol=1e-6)
        # Outward normals point along the radius.
        npt.assert_allclose(cloud.normals, cloud.points, atol=1e-4)

    def test_union_covers_both_components(self):
        a = sphere("A", (0, 0, 0), 1.0)
        b = sphere("B", (5, 0, 0), 1.0)
        cloud = sample_surface(Union((Leaf("A"), Leaf("B"))), [a, b], 400, seed=6)
        on_a = np.abs(signed_distance(a, cloud.points)) < 1e-6
        on_b = np.abs(signed_distance(b, cloud.points)) < 1e-6
        assert on_a.sum() > 0 and on_b.sum() > 0
        assert np.all(on_a | on_b)

    def test_unbounded_tree_rejected(self):
        s = sphere("A", (0, 0, 0), 1.0)
        with pytest.raises(StructuralError):
            sample_surface(Complement(Leaf("A")), [s], 10, seed=0)

    def test_subtracted_surface_normals_flip(self):
        # B with a bite taken out by D: the cut surface lies on D's sphere
        # and its outward normal points toward D's centre side (inward for D).
        b = sphere("B", (0, 0, 0), 1.0)
        d = sphere("D", (1.2, 0, 0), 0.8)
        tree = Intersection((Leaf("B"), Complement(Leaf("D"))))
        cloud = sample_surface(tree, [b, d], 500, seed=7)
        on_d = np.abs(signed_distance(d, cloud.points)) < 1e-6
        assert on_d.sum() > 0
        outward_for_d = (cloud.points[on_d] - np.array([1.2, 0, 0]))
        outward_for_d /= np.linalg.norm(outward_for_d, axis=1, keepdims=True)
        dots = np.einsum("ij,ij->i", cloud.normals[on_d], outward_for_d)
        assert np.all(dots < -0.99)

    def test_deterministic(self):
        s = sphere("A", (0, 0, 0), 1.0)
        c1 = sample_surface(Leaf("A"), [s], 50, seed=8)
        c2 = sample_surface(Leaf("A"), [s], 50, seed=8)
        npt.assert_array_equal(c1.points, c2.points)
        npt.assert_array_equal(c1.normals, c2.normals)


class TestCloudMembership:
    def test_sphere_cloud(self):
        s = sphere("A", (0, 0, 0), 1.0)
        cloud = sample_surface(Leaf("A"), [s], 800, seed=11)
        assert cloud_membership(cloud, (0, 0, 0))
        assert not cloud_membership(cloud, (2, 0, 0))

    def test_missing_normals_raises(self):
        cloud = PointCloud(np.zeros((4, 3)))
        with pytest.raises(UnsupportedOracleError):
            cloud_membership(cloud, (0, 0, 0))

    def test_agreement_with_tree_membership(self):
        # Cloud oracle and ground-truth tree agree away from the surface.
        a = sphere("A", (0, 0, 0), 1.0)
        b = sphere("B", (1.2, 0, 0), 0.9)
        prims = [a, b]
        tree = Union((Leaf("A"), Leaf("B")))
        n_surf = 4000
        cloud = sample_surface(tree, prims, n_surf, seed=12)
        # Mean sampling spacing ~ sqrt(area / n); stay 2 spacings away.
        area = 4 * np.pi * (1.0 + 0.9**2)
        spacing = np.sqrt(area / n_surf)
        rng = np.random.default_rng(13)
        pts = rng.uniform(-2.5, 3.0, size=(20_000, 3))
        v = tree_value(tree, prims, pts)
        far = np.abs(v) > 2 * spacing
        pts = pts[far][:10_000]
        truth = tree_membership(tree, prims, pts)
        approx = cloud_membership(cloud, pts)
        agreement = np.mean(truth == approx)
        assert agreement >= 0.999


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

class TestFileIO:
    def test_primitive_round_trip(self, tmp_path):
        prims = [
            sphere("A", (-2.6, 0, 0), 1.0),
            box("F", (4, -2.4, 0), (1, 1, 1), rotation=_rot_z(0.3)),
            cylinder("C", (0, 0, 0), 1.2, 0.5),
        ]
        path = tmp_path / "prims.json"
        save_primitives(prims, path)
        loaded = load_primitives(path)
        assert [p.pid for p in loaded] == ["A", "F", "C"]
        for a, b in zip(prims, loaded):
            assert a.kind == b.kind
            npt.assert_allclose(a.translation, b.translation)
            npt.assert_allclose(a.rotation, b.rotation)

    def test_cloud_round_trip(self, tmp_path):
        pts = np.array([[0.0, 0.5, 1.0], [1.0, 2.0, 3.0]])
        nrm = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        path = tmp_path / "cloud.xyz"
        save_cloud(PointCloud(pts, nrm), path)
        loaded = load_cloud(path)
        npt.assert_allclose(loaded.points, pts)
        npt.assert_allclose(loaded.normals, nrm)

    def test_cloud_comments_and_errors(self, tmp_path):
        path = tmp_path / "cloud.xyz"
        path.write_text("# comment\n0 0 0 1 0 0\n\n1 1 1 0 0 1\n")
        assert len(load_cloud(path)) == 2
        bad = tmp_path / "bad.xyz"
        bad.write_text("0 0\n")
        from csgcompress.errors import FileFormatError
        with pytest.raises(FileFormatError, match="bad.xyz:1"):
            load_cloud(bad)
