"""Avatar evaluation: state + pack -> posed mesh and skeleton.

Fixed pipeline order: blend shapes, uniform height scale, asset attachment,
linear blend skinning, normal recomputation. The whole pipeline is a pure
function of (state, pack); identical inputs give bit-identical vertex arrays.
"""

from __future__ import annotations

import numpy as np

from .mesh import Mesh, compute_normals
from .pack import Pack
from .skeleton import Skeleton
from .state import AvatarState, aging_weight

BODY_COLOR = (0.80, 0.69, 0.60)
_TAG_COLORS = [
    ("red", (0.76, 0.22, 0.20)),
    ("blue", (0.24, 0.36, 0.65)),
    ("green", (0.26, 0.55, 0.32)),
    ("white", (0.92, 0.92, 0.92)),
    ("black", (0.12, 0.12, 0.13)),
]
_SLOT_COLORS = {
    "outfit": (0.36, 0.44, 0.62),
    "footwear": (0.25, 0.25, 0.28),
    "hair": (0.32, 0.24, 0.16),
}


def _key_weights(state: AvatarState, pack: Pack) -> dict[str, float]:
    """Effective blend weight per key: stored value plus the aging drive."""
    w_age = aging_weight(state.age_years)
    weights: dict[str, float] = {}
    for kdef in pack.registry.keys.values():
        w = state.key_values.get(kdef.name, kdef.default)
        if "aging" in kdef.tags:
            w = w + w_age
        if w != 0.0:
            weights[kdef.name] = w
    return weights


def _blended(vertices: np.ndarray, deltas, weights: dict[str, float]) -> np.ndarray:
    out = vertices.copy()
    for key, w in weights.items():
        block = deltas.get(key)
        if block is None:
            continue
        idx, offsets = block
        if idx.size:
            out[idx] += w * offsets
    return out


def _asset_color(info) -> tuple[float, float, float]:
    for tag, color in _TAG_COLORS:
        if tag in info.tags:
            return color
    return _SLOT_COLORS.get(info.slot, (0.5, 0.5, 0.5))


def evaluate(state: AvatarState, pack: Pack) -> tuple[Mesh, Skeleton]:
    weights = _key_weights(state, pack)
    scale = state.height_cm / pack.registry.base_height_cm

    skeleton = pack.skeleton if scale == 1.0 else pack.skeleton.scaled(scale)

    parts = []  # (name, verts, tris, joints, weights_, color)
    base = pack.base_mesh
    body_verts = _blended(base.vertices, pack.deltas, weights)
    if scale != 1.0:
        body_verts = body_verts * scale
    parts.append(("body", body_verts, base.triangles, base.skin_joints, base.skin_weights, BODY_COLOR))

    for slot in sorted(state.slots):
        asset_id = state.slots[slot]
        if asset_id is None:
            continue
        am = pack.assets[asset_id]
        av = _blended(am.mesh.vertices, am.deltas, weights)
        if scale != 1.0:
            av = av * scale
        parts.append((asset_id, av, am.mesh.triangles, am.mesh.skin_joints, am.mesh.skin_weights, _asset_color(am.info)))

    total = sum(len(p[1]) for p in parts)
    vertices = np.empty((total, 3))
    triangles_list = []
    skin_joints = np.zeros((total, 4), dtype=np.int32)
    skin_weights = np.zeros((total, 4))
    colors = np.empty((total, 3))
    groups: dict[str, np.ndarray] = {}
    cursor = 0
    for name, verts, tris, joints, wts, color in parts:
        n = len(verts)
        vertices[cursor:cursor + n] = verts
        triangles_list.append(tris.astype(np.int64) + cursor)
        if joints is not None:
            skin_joints[cursor:cursor + n] = joints
            skin_weights[cursor:cursor + n] = wts
        else:
            skin_weights[cursor:cursor + n, 0] = 1.0
        colors[cursor:cursor + n] = color
        groups[name] = np.arange(cursor, cursor + n, dtype=np.int32)
        cursor += n
    triangles = np.concatenate(triangles_list).astype(np.int32)

    posed = _skin(vertices, skin_joints, skin_weights, skeleton, state.pose)

    mesh = Mesh(
        vertices=posed,
        triangles=triangles,
        normals=compute_normals(posed, triangles),
        skin_joints=skin_joints,
        skin_weights=skin_weights,
        groups=groups,
        colors=colors,
    )
    return mesh, skeleton


def _rigid_inverse(m: np.ndarray) -> np.ndarray:
    out = np.eye(4)
    r = m[:3, :3].T
    out[:3, :3] = r
    out[:3, 3] = -r @ m[:3, 3]
    return out


def _skin(vertices, skin_joints, skin_weights, skeleton: Skeleton, pose) -> np.ndarray:
    # Bind pose is the identity of the pipeline, exactly.
    if not pose or all(a == (0.0, 0.0, 0.0) for a in pose.values()):
        return vertices
    posed = skeleton.pose_globals(pose)
    binds = skeleton.bind_globals()
    deform = np.stack([posed[j] @ _rigid_inverse(binds[j]) for j in range(skeleton.joint_count)])
    homo = np.concatenate([vertices, np.ones((len(vertices), 1))], axis=1)
    per_joint = deform[skin_joints]                     # (N, 4, 4, 4)
    blended = np.einsum("nk,nkij,nj->ni", skin_weights, per_joint, homo)
    return np.ascontiguousarray(blended[:, :3])
