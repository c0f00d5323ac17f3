"""Procedural humanoid base mesh.

The body is an isosurface of a smooth union of tapered capsules, extracted
with marching cubes on a sagittally mirrored grid, so the result is watertight
and symmetric by construction. Region masks are gaussian falloffs around
anatomical anchor segments; skin weights fall off with squared distance to the
bone segments and are normalized to the four strongest influences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from skimage import measure

from ..core.mesh import Mesh, compute_normals, MAX_INFLUENCES
from ..core.skeleton import CANONICAL_POSITIONS, Skeleton, make_skeleton

# Tapered capsules (p0, p1, r0, r1). Right side is implied by grid mirroring,
# but both sides must be present in the field so the smooth union blends the
# midline correctly.
_CAPSULES = [
    ((0.0, 95.0, 0.0), (0.0, 135.0, 0.0), 16.0, 13.5),   # torso
    ((0.0, 138.0, 0.0), (0.0, 150.0, 0.0), 7.0, 7.0),    # neck
    ((0.0, 157.0, 0.0), (0.0, 163.0, 0.0), 11.0, 11.0),  # head
    ((18.0, 140.0, 0.0), (45.0, 140.0, 0.0), 6.5, 5.5),  # upper arm
    ((45.0, 140.0, 0.0), (66.0, 140.0, 0.0), 5.5, 4.5),  # forearm
    ((66.0, 140.0, 0.0), (76.0, 140.0, 0.0), 4.5, 4.0),  # hand
    ((9.0, 92.0, 0.0), (10.0, 50.0, 0.0), 9.0, 7.5),     # thigh
    ((10.0, 50.0, 0.0), (10.0, 10.0, 0.0), 7.0, 5.5),    # calf
    ((10.0, 8.0, 0.0), (10.0, 6.0, 14.0), 5.0, 4.5),     # foot
]

_SMOOTH_K = 4.0

# Grid cell size at resolution 1, halved per extra level; calibrated so the
# vertex count tracks 500 * 4**(resolution - 1).
_CELL_R1 = 7.4

_GRID_X = 88.0
_GRID_Y = (-8.0, 186.0)
_GRID_Z = (-28.0, 30.0)

# Mask anchors: (kind, geometry, sigma, mirrored?). Point anchors use a zero
# length segment.
_MASK_ANCHORS = {
    "torso": ((0, 100, 0), (0, 132, 0), 14.0, False),
    "chest": ((-8, 126, 8), (8, 126, 8), 8.0, False),
    "shoulders": ((17, 141, 0), (17, 141, 0), 8.0, True),
    "traps": ((-8, 144, -2), (8, 144, -2), 7.0, False),
    "biceps": ((20, 140, 0), (40, 140, 0), 6.0, True),
    "belly": ((0, 103, 10), (0, 103, 10), 11.0, False),
    "quads": ((9, 85, 5), (10, 58, 5), 8.0, True),
    "thighs": ((9, 88, 0), (10, 52, 0), 9.0, True),
    "calves": ((10, 48, -1), (10, 18, -2), 7.0, True),
    "jaw": ((-5, 150, 7), (5, 150, 7), 5.0, False),
    "cheeks": ((5.5, 158, 8.5), (5.5, 158, 8.5), 4.5, True),
    "brow": ((-4, 166, 9), (4, 166, 9), 4.0, False),
    "eyes": ((4, 163, 10), (4, 163, 10), 4.0, True),
    "waist": ((0, 106, 0), (0, 112, 0), 9.0, False),
    "hips": ((12, 96, 0), (12, 96, 0), 9.0, True),
    "neck": ((0, 139, 0), (0, 150, 0), 6.0, False),
    "arms": ((19, 140, 0), (65, 140, 0), 7.0, True),
    "forearms": ((46, 140, 0), (64, 140, 0), 6.0, True),
    "hands": ((67, 140, 0), (75, 140, 0), 5.0, True),
    "legs": ((9, 90, 0), (10, 12, 0), 10.0, True),
    "face": ((0, 160, 9), (0, 160, 9), 8.0, False),
    "chin": ((0, 149, 8), (0, 149, 8), 3.5, False),
    "nose": ((0, 161, 11), (0, 161, 11), 3.0, False),
    "lips": ((0, 155, 10), (0, 155, 10), 3.0, False),
    "forehead": ((0, 168, 8), (0, 168, 8), 5.0, False),
}

# Composites: max over scaled member masks.
_MASK_COMPOSITES = {
    "muscles": (("chest", 1.0), ("shoulders", 1.0), ("biceps", 1.0),
                ("traps", 1.0), ("quads", 1.0), ("calves", 1.0)),
    "fat": (("belly", 1.0), ("torso", 0.8), ("thighs", 0.7), ("cheeks", 0.6)),
    "beard_zone": (("jaw", 1.0), ("chin", 1.0)),
    "feminine_shape": (("chest", 1.0), ("hips", 1.0)),
}

REQUIRED_MASKS = [
    "torso", "chest", "shoulders", "biceps", "traps", "quads", "thighs",
    "calves", "belly", "jaw", "cheeks", "brow", "eyes",
]

_MASK_FLOOR = 1e-3

# Bone segments for weight painting: joint -> (seg start, seg end) in
# authoring space. Leaf joints get a short outward stub.
_BONES = {
    "pelvis": ("pelvis", "spine"),
    "spine": ("spine", "chest"),
    "chest": ("chest", "neck"),
    "neck": ("neck", "head"),
    "head": ("head", (0.0, 170.0, 0.0)),
    "l_shoulder": ("l_shoulder", "l_elbow"),
    "l_elbow": ("l_elbow", "l_wrist"),
    "l_wrist": ("l_wrist", (76.0, 140.0, 0.0)),
    "r_shoulder": ("r_shoulder", "r_elbow"),
    "r_elbow": ("r_elbow", "r_wrist"),
    "r_wrist": ("r_wrist", (-76.0, 140.0, 0.0)),
    "l_hip": ("l_hip", "l_knee"),
    "l_knee": ("l_knee", "l_ankle"),
    "l_ankle": ("l_ankle", (10.0, 6.0, 14.0)),
    "r_hip": ("r_hip", "r_knee"),
    "r_knee": ("r_knee", "r_ankle"),
    "r_ankle": ("r_ankle", (-10.0, 6.0, 14.0)),
}


@dataclass
class BaseBuild:
    mesh: Mesh
    skeleton: Skeleton
    masks: dict[str, np.ndarray]


def _segment_distance(points: np.ndarray, a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ba = b - a
    denom = float(ba @ ba)
    pa = points - a
    if denom < 1e-12:
        return np.linalg.norm(pa, axis=-1)
    t = np.clip((pa @ ba) / denom, 0.0, 1.0)
    return np.linalg.norm(pa - t[..., None] * ba, axis=-1)


def _capsule_field(points: np.ndarray, p0, p1, r0, r1) -> np.ndarray:
    a = np.asarray(p0, dtype=np.float64)
    b = np.asarray(p1, dtype=np.float64)
    ba = b - a
    denom = float(ba @ ba)
    pa = points - a
    t = np.clip((pa @ ba) / denom, 0.0, 1.0) if denom > 1e-12 else np.zeros(points.shape[0])
    d = np.linalg.norm(pa - t[..., None] * ba, axis=-1)
    return d - (r0 + (r1 - r0) * t)


def _smooth_min(a: np.ndarray, b: np.ndarray, k: float) -> np.ndarray:
    h = np.clip(0.5 + 0.5 * (b - a) / k, 0.0, 1.0)
    return b * (1.0 - h) + a * h - k * h * (1.0 - h)


def _mirror_x(p) -> tuple:
    return (-p[0], p[1], p[2])


def _body_field(points: np.ndarray) -> np.ndarray:
    field = None
    for p0, p1, r0, r1 in _CAPSULES:
        for mirrored in (False, True):
            if mirrored and p0[0] == 0.0 and p1[0] == 0.0:
                continue
            a = _mirror_x(p0) if mirrored else p0
            b = _mirror_x(p1) if mirrored else p1
            d = _capsule_field(points, a, b, r0, r1)
            field = d if field is None else _smooth_min(field, d, _SMOOTH_K)
    return field


def build_base_mesh(resolution: int) -> BaseBuild:
    """Build the humanoid base mesh, skeleton, and region masks.

    Vertex count scales as 500 * 4**(resolution - 1) within about 20%.
    """
    if not 1 <= resolution <= 4:
        raise ValueError(f"resolution must be in [1, 4], got {resolution}")
    cell = _CELL_R1 / (2 ** (resolution - 1))

    # x axis: exactly symmetric sample positions, mirrored field.
    nx = int(np.ceil(_GRID_X / cell))
    xs_half = np.linspace(0.0, nx * cell, nx + 1)
    xs = np.concatenate([-xs_half[:0:-1], xs_half])
    ny = int(np.ceil((_GRID_Y[1] - _GRID_Y[0]) / cell))
    ys = _GRID_Y[0] + np.arange(ny + 1) * cell
    nz = int(np.ceil((_GRID_Z[1] - _GRID_Z[0]) / cell))
    zs = _GRID_Z[0] + np.arange(nz + 1) * cell

    gx, gy, gz = np.meshgrid(xs_half, ys, zs, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    half = _body_field(pts).reshape(len(xs_half), len(ys), len(zs))
    vol = np.concatenate([half[:0:-1], half], axis=0)

    verts, faces, _, _ = measure.marching_cubes(
        vol, level=0.0, spacing=(cell, cell, cell), gradient_direction="ascent"
    )
    verts = verts.astype(np.float64)
    verts[:, 0] += xs[0]
    verts[:, 1] += ys[0]
    verts[:, 2] += zs[0]
    faces = faces.astype(np.int32)

    # Outward orientation: positive signed volume.
    a, b, c = verts[faces[:, 0]], verts[faces[:, 1]], verts[faces[:, 2]]
    signed_volume = float(np.einsum("ij,ij->", a, np.cross(b, c)) / 6.0)
    if signed_volume < 0:
        faces = faces[:, ::-1].copy()

    # Normalize so the vertical extent is exactly 175 with feet at y = 0.
    y_min = float(verts[:, 1].min())
    y_max = float(verts[:, 1].max())
    scale = 175.0 / (y_max - y_min)
    verts[:, 1] -= y_min
    verts *= scale

    def transform(p) -> np.ndarray:
        q = np.asarray(p, dtype=np.float64).copy()
        q[..., 1] -= y_min
        return q * scale

    # Joints stay at the canonical positions (not mesh-normalized), so packs
    # at every resolution share one skeleton and clips retarget identically.
    positions = {name: np.asarray(p) for name, p in CANONICAL_POSITIONS.items()}
    skeleton = make_skeleton(positions)

    joints_idx, weights = _paint_weights(verts, positions)
    masks = _build_masks(verts, transform)

    mesh = Mesh(
        vertices=verts,
        triangles=faces,
        normals=compute_normals(verts, faces),
        skin_joints=joints_idx,
        skin_weights=weights,
        groups={"body": np.arange(len(verts), dtype=np.int32)},
    )
    mesh.validate(joint_count=skeleton.joint_count)
    return BaseBuild(mesh=mesh, skeleton=skeleton, masks=masks)


def _paint_weights(verts, positions):
    names = []
    dists = []
    from ..core.skeleton import CANONICAL_JOINTS

    for joint in CANONICAL_JOINTS:
        if joint not in _BONES:
            continue  # root carries no skin
        a_ref, b_ref = _BONES[joint]
        a = positions[a_ref] if isinstance(a_ref, str) else np.asarray(a_ref)
        b = positions[b_ref] if isinstance(b_ref, str) else np.asarray(b_ref)
        names.append(joint)
        dists.append(_segment_distance(verts, a, b))
    dist = np.stack(dists, axis=1)
    influence = 1.0 / (dist ** 2 + 4.0)

    order = np.argsort(-influence, axis=1)[:, :MAX_INFLUENCES]
    top = np.take_along_axis(influence, order, axis=1)
    top = top / top.sum(axis=1, keepdims=True)

    joint_index = {j: i for i, j in enumerate(CANONICAL_JOINTS)}
    bone_to_joint = np.array([joint_index[n] for n in names], dtype=np.int32)
    joints_idx = bone_to_joint[order]
    return joints_idx.astype(np.int32), top.astype(np.float64)


def _build_masks(verts, transform) -> dict[str, np.ndarray]:
    masks: dict[str, np.ndarray] = {}
    for name, (p0, p1, sigma, mirrored) in _MASK_ANCHORS.items():
        d = _segment_distance(verts, transform(p0), transform(p1))
        if mirrored:
            d2 = _segment_distance(verts, transform(_mirror_x(p0)), transform(_mirror_x(p1)))
            d = np.minimum(d, d2)
        w = np.exp(-((d / (sigma * 1.0)) ** 2))
        w[w < _MASK_FLOOR] = 0.0
        masks[name] = w
    for name, members in _MASK_COMPOSITES.items():
        w = np.zeros(len(verts))
        for member, factor in members:
            w = np.maximum(w, masks[member] * factor)
        masks[name] = w
    for name, w in masks.items():
        if not (w > 0).any():
            raise AssertionError(f"mask {name!r} is empty at this resolution")
    return masks
