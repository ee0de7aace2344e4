"""Deterministic region and surface samplers.

All randomness flows from explicit integer seeds through
``numpy.random.SeedSequence``, so results are reproducible bit for bit and
parallel callers can derive independent per-task streams from one master
seed.  Rejection sampling draws fixed-size attempt batches; with the same
seed, runs that ask for more points extend the accepted sequence of runs
that asked for fewer (a prefix property the intersection-graph builder
relies on).
"""

from __future__ import annotations

import numpy as np

from ..errors import StructuralError
from .cloud import PointCloud
from .csg import CsgNode, leaf_ids, tree_value
from .primitives import (
    Primitive,
    aabb,
    index_primitives,
    signed_distance,
    surface_area,
)

_BATCH = 4096
_ATTEMPT_FACTOR = 64  # rejection cap: ~64 attempts per requested point
_SURFACE_ATTEMPT_FACTOR = 512


def derive_rng(master_seed: int, *key) -> np.random.Generator:
    """Independent generator for subtask ``key`` of a master seed."""
    return np.random.default_rng(np.random.SeedSequence((int(master_seed),) + tuple(int(k) for k in key)))


def derive_seed(master_seed: int, *key) -> int:
    """Plain integer sub-seed for APIs that take a seed, not a generator."""
    return int(derive_rng(master_seed, *key).integers(0, 2**63 - 1))


def region_box(positive) -> tuple[np.ndarray, np.ndarray] | None:
    """Intersection of the positive primitives' AABBs, or None if empty."""
    lo, hi = aabb(positive[0])
    for p in positive[1:]:
        plo, phi = aabb(p)
        lo = np.maximum(lo, plo)
        hi = np.minimum(hi, phi)
    if np.any(lo >= hi):
        return None
    return lo, hi


def union_box(primitives) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = aabb(primitives[0])
    for p in primitives[1:]:
        plo, phi = aabb(p)
        lo = np.minimum(lo, plo)
        hi = np.maximum(hi, phi)
    return lo, hi


def scene_diameter(primitives) -> float:
    lo, hi = union_box(primitives)
    return float(np.linalg.norm(hi - lo))


def sample_region(positive, negative, count: int, seed: int) -> np.ndarray:
    """Up to ``count`` uniform points inside all positives and outside all negatives.

    Rejection-samples the intersection of the positive AABBs.  Returns a
    (k, 3) array with k <= count; k == 0 signals an (apparently) empty
    region -- interpreting emptiness is the caller's job.
    """
    positive = list(positive)
    negative = list(negative)
    if not positive:
        raise ValueError("sample_region needs at least one positive primitive")
    if count <= 0:
        return np.empty((0, 3))
    box = region_box(positive)
    if box is None:
        return np.empty((0, 3))
    lo, hi = box
    rng = np.random.default_rng(int(seed))
    accepted: list[np.ndarray] = []
    n_accepted = 0
    attempts = 0
    max_attempts = _ATTEMPT_FACTOR * count
    while n_accepted < count and attempts < max_attempts:
        pts = rng.uniform(lo, hi, size=(_BATCH, 3))
        attempts += _BATCH
        ok = np.ones(_BATCH, dtype=bool)
        for p in positive:
            ok &= signed_distance(p, pts) < 0
            if not ok.any():
                break
        if ok.any():
            for p in negative:
                ok &= signed_distance(p, pts) >= 0
                if not ok.any():
                    break
        if ok.any():
            accepted.append(pts[ok])
            n_accepted += int(ok.sum())
    if not accepted:
        return np.empty((0, 3))
    return np.concatenate(accepted)[:count]


# ---------------------------------------------------------------------------
# Surface sampling
# ---------------------------------------------------------------------------

def _sample_on_primitive(prim: Primitive, n: int, rng: np.random.Generator) -> np.ndarray:
    """n points uniformly distributed on the primitive's surface (world frame)."""
    if prim.kind == "sphere":
        r = prim.params["radius"]
        d = rng.normal(size=(n, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        local = r * d
    elif prim.kind == "box":
        a, b, c = prim.params["half_extents"]
        areas = np.array([b * c, a * c, a * b])  # faces normal to x, y, z
        axis = rng.choice(3, size=n, p=areas / areas.sum())
        side = rng.choice([-1.0, 1.0], size=n)
        u = rng.uniform(-1.0, 1.0, size=(n, 2))
        local = np.empty((n, 3))
        half = np.array([a, b, c])
        for ax in range(3):
            m = axis == ax
            others = [i for i in range(3) if i != ax]
            local[m, ax] = side[m] * half[ax]
            local[np.ix_(m, others)] = u[m] * half[others]
    else:  # cylinder
        r = prim.params["radius"]
        h = prim.params["half_height"]
        side_area = 4.0 * np.pi * r * h
        cap_area = 2.0 * np.pi * r * r
        on_side = rng.random(n) < side_area / (side_area + cap_area)
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
        local = np.empty((n, 3))
        m = on_side
        local[m, 0] = r * np.cos(theta[m])
        local[m, 1] = r * np.sin(theta[m])
        local[m, 2] = rng.uniform(-h, h, size=int(m.sum()))
        m = ~on_side
        rad = r * np.sqrt(rng.random(int(m.sum())))
        local[m, 0] = rad * np.cos(theta[m])
        local[m, 1] = rad * np.sin(theta[m])
        local[m, 2] = np.where(rng.random(int(m.sum())) < 0.5, -h, h)
    return local @ prim._rot.T + prim.translation


def _tree_bounded(tree: CsgNode, by_id: dict[str, Primitive]) -> bool:
    """Probe far-away points; any inside answer means the region is unbounded."""
    prims = [by_id[i] for i in leaf_ids(tree)]
    lo, hi = union_box(prims)
    center = (lo + hi) / 2.0
    half = np.maximum((hi - lo) / 2.0, 1.0) * 8.0
    corners = center + half * np.array(
        [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]
    )
    axes = center + half * np.array(
        [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]]
    )
    probes = np.vstack([corners, axes])
    return not bool(np.any(tree_value(tree, by_id, probes) < 0))


def _numeric_normals(tree: CsgNode, by_id, pts: np.ndarray, eps: float) -> np.ndarray:
    grad = np.empty_like(pts)
    for ax in range(3):
        step = np.zeros(3)
        step[ax] = eps
        grad[:, ax] = (
            tree_value(tree, by_id, pts + step) - tree_value(tree, by_id, pts - step)
        ) / (2.0 * eps)
    lens = np.linalg.norm(grad, axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(lens > 0, grad / lens, 0.0)


def sample_surface(tree: CsgNode, primitives, count: int, seed: int) -> PointCloud:
    """``count`` points on the surface of the solid, with outward unit normals.

    Candidate points are drawn area-weighted on the primitives' surfaces,
    kept when the composed tree value vanishes there, and validated with a
    two-sided membership probe so that spurious zero-value points interior
    to the solid (an artefact of min/max composition) are rejected.  The
    same probe orients the normals outward.
    """
    by_id = index_primitives(primitives)
    validate = leaf_ids(tree) - set(by_id)
    if validate:
        raise StructuralError(f"tree references unknown primitives: {sorted(validate)}")
    if count <= 0:
        return PointCloud(np.empty((0, 3)), np.empty((0, 3)))
    if not _tree_bounded(tree, by_id):
        raise StructuralError("cannot sample the surface of an unbounded solid")

    prims = [by_id[i] for i in sorted(leaf_ids(tree))]
    areas = np.array([surface_area(p) for p in prims])
    weights = areas / areas.sum()
    diag = scene_diameter(prims)
    on_tol = 1e-9 * max(diag, 1.0)
    probe = 1e-4 * max(diag, 1.0)
    grad_eps = 1e-6 * max(diag, 1.0)

    rng = np.random.default_rng(int(seed))
    pts_out: list[np.ndarray] = []
    nrm_out: list[np.ndarray] = []
    n_total = 0
    attempts = 0
    max_attempts = _SURFACE_ATTEMPT_FACTOR * count
    while n_total < count and attempts < max_attempts:
        counts = rng.multinomial(_BATCH, weights)
        batch = np.vstack(
            [
                _sample_on_primitive(p, k, rng)
                for p, k in zip(prims, counts)
                if k > 0
            ]
        )
        # The batch is blocked by primitive; shuffle so truncation below
        # cannot bias the cloud toward the first primitives.
        batch = batch[rng.permutation(batch.shape[0])]
        attempts += _BATCH
        v = tree_value(tree, by_id, batch)
        batch = batch[np.abs(v) <= on_tol]
        if batch.shape[0] == 0:
            continue
        normals = _numeric_normals(tree, by_id, batch, grad_eps)
        ok = np.linalg.norm(normals, axis=1) > 0.5
        batch, normals = batch[ok], normals[ok]
        if batch.shape[0] == 0:
            continue
        # Two-sided probe: +normal side must be outside, -normal side inside.
        out_side = tree_value(tree, by_id, batch + probe * normals) >= 0
        in_side = tree_value(tree, by_id, batch - probe * normals) < 0
        keep = out_side & in_side
        if keep.any():
            pts_out.append(batch[keep])
            nrm_out.append(normals[keep])
            n_total += int(keep.sum())
    if n_total < count:
        raise StructuralError(
            f"surface sampler produced only {n_total}/{count} points; "
            "the solid may be degenerate"
        )
    pts = np.concatenate(pts_out)[:count]
    nrm = np.concatenate(nrm_out)[:count]
    nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
    return PointCloud(pts, nrm)
