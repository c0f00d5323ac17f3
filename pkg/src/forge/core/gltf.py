"""glTF 2.0 binary (.glb) export of skinned avatars with optional animations.

Output is deterministic: sorted JSON keys, explicit little-endian dtypes, no
timestamps. Accessor min/max are computed from the cast float32 data so they
match the buffer exactly.
"""

from __future__ import annotations

import json
import struct

import numpy as np
from scipy.spatial.transform import Rotation

from ..errors import IoError
from .mesh import Mesh
from .skeleton import Skeleton

_MAGIC = 0x46546C67
_CHUNK_JSON = 0x4E4F534A
_CHUNK_BIN = 0x004E4942

_FLOAT = 5126
_UINT32 = 5125
_USHORT = 5123

_ARRAY_BUFFER = 34962
_ELEMENT_ARRAY_BUFFER = 34963


class _BinChunk:
    def __init__(self):
        self.parts: list[bytes] = []
        self.length = 0

    def add(self, data: bytes, align: int = 4) -> tuple[int, int]:
        pad = (-self.length) % align
        if pad:
            self.parts.append(b"\x00" * pad)
            self.length += pad
        offset = self.length
        self.parts.append(data)
        self.length += len(data)
        return offset, len(data)

    def blob(self) -> bytes:
        data = b"".join(self.parts)
        pad = (-len(data)) % 4
        return data + b"\x00" * pad


def _euler_to_quat(angles_deg: np.ndarray) -> np.ndarray:
    """XYZ Euler degrees -> glTF quaternion (x, y, z, w), unit length."""
    q = Rotation.from_euler("xyz", angles_deg, degrees=True).as_quat()
    q = np.atleast_2d(q).astype(np.float32)
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def export_gltf(
    mesh: Mesh,
    skeleton: Skeleton,
    animations=None,
    out: str | None = None,
) -> bytes:
    """Build a .glb; writes to `out` when given, always returns the bytes.

    `animations` is an optional list of clips with .name, .channels
    (joint -> [(t, rx, ry, rz)]) and .root_translation ([(t, x, y, z)]).
    """
    bin_chunk = _BinChunk()
    buffer_views: list[dict] = []
    accessors: list[dict] = []

    def add_accessor(array: np.ndarray, component: int, type_: str, *,
                     target: int | None = None, minmax: bool = False) -> int:
        data = np.ascontiguousarray(array)
        offset, length = bin_chunk.add(data.tobytes())
        view = {"buffer": 0, "byteOffset": offset, "byteLength": length}
        if target is not None:
            view["target"] = target
        buffer_views.append(view)
        acc = {
            "bufferView": len(buffer_views) - 1,
            "componentType": component,
            "count": int(data.shape[0]),
            "type": type_,
        }
        if minmax:
            flat = data.reshape(data.shape[0], -1)
            acc["min"] = [float(x) for x in flat.min(axis=0)]
            acc["max"] = [float(x) for x in flat.max(axis=0)]
        accessors.append(acc)
        return len(accessors) - 1

    positions = mesh.vertices.astype("<f4")
    normals = mesh.normals.astype("<f4")
    # Unit-length guarantee survives the float32 cast only approximately;
    # renormalize in f32 to keep the validator happy.
    norms = np.linalg.norm(normals, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    normals = (normals / norms).astype("<f4")
    indices = mesh.triangles.astype("<u4").reshape(-1)

    pos_acc = add_accessor(positions, _FLOAT, "VEC3", target=_ARRAY_BUFFER, minmax=True)
    nrm_acc = add_accessor(normals, _FLOAT, "VEC3", target=_ARRAY_BUFFER)
    idx_acc = add_accessor(indices.reshape(-1, 1), _UINT32, "SCALAR", target=_ELEMENT_ARRAY_BUFFER)

    attributes = {"POSITION": pos_acc, "NORMAL": nrm_acc}
    if mesh.colors is not None:
        col_acc = add_accessor(mesh.colors.astype("<f4"), _FLOAT, "VEC3", target=_ARRAY_BUFFER)
        attributes["COLOR_0"] = col_acc

    skinned = mesh.skin_weights is not None
    if skinned:
        joints16 = mesh.skin_joints.astype("<u2")
        weights32 = mesh.skin_weights.astype("<f4")
        sums = weights32.sum(axis=1, keepdims=True)
        sums[sums == 0] = 1.0
        weights32 = (weights32 / sums).astype("<f4")
        attributes["JOINTS_0"] = add_accessor(joints16, _USHORT, "VEC4", target=_ARRAY_BUFFER)
        attributes["WEIGHTS_0"] = add_accessor(weights32, _FLOAT, "VEC4", target=_ARRAY_BUFFER)

    # Nodes: joints first (index = joint index), then the skinned mesh node.
    binds = skeleton.bind_globals()
    nodes: list[dict] = []
    for i, joint in enumerate(skeleton.joints):
        if joint.parent < 0:
            local = binds[i]
        else:
            parent_inv = np.eye(4)
            parent_inv[:3, :3] = binds[joint.parent][:3, :3].T
            parent_inv[:3, 3] = -parent_inv[:3, :3] @ binds[joint.parent][:3, 3]
            local = parent_inv @ binds[i]
        node = {"name": joint.name, "translation": [float(x) for x in local[:3, 3]]}
        nodes.append(node)
    for i, joint in enumerate(skeleton.joints):
        if joint.parent >= 0:
            nodes[joint.parent].setdefault("children", []).append(i)

    mesh_node = {"name": "avatar", "mesh": 0}
    doc: dict = {
        "asset": {"version": "2.0", "generator": "forge"},
        "buffers": [{"byteLength": 0}],  # patched below
        "bufferViews": buffer_views,
        "accessors": accessors,
        "meshes": [{
            "name": "avatar",
            "primitives": [{"attributes": attributes, "indices": idx_acc, "mode": 4, "material": 0}],
        }],
        "materials": [{
            "name": "flat",
            "pbrMetallicRoughness": {
                "baseColorFactor": [1.0, 1.0, 1.0, 1.0],
                "metallicFactor": 0.0,
                "roughnessFactor": 0.9,
            },
        }],
        "nodes": nodes,
        "scenes": [{"nodes": [0, len(skeleton.joints)]}],
        "scene": 0,
    }

    if skinned:
        ibms = np.stack([np.linalg.inv(binds[j]) for j in range(skeleton.joint_count)])
        # glTF matrices are column-major.
        ibm_data = np.ascontiguousarray(ibms.transpose(0, 2, 1).reshape(-1, 16).astype("<f4"))
        ibm_acc = add_accessor(ibm_data, _FLOAT, "MAT4", target=None)
        doc["skins"] = [{
            "inverseBindMatrices": ibm_acc,
            "joints": list(range(skeleton.joint_count)),
            "skeleton": 0,
        }]
        mesh_node["skin"] = 0
    nodes.append(mesh_node)

    if animations:
        doc["animations"] = [
            _export_animation(clip, skeleton, add_accessor) for clip in animations
        ]

    blob = bin_chunk.blob()
    doc["buffers"][0]["byteLength"] = len(blob)

    json_bytes = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    json_bytes += b" " * ((-len(json_bytes)) % 4)

    total = 12 + 8 + len(json_bytes) + 8 + len(blob)
    glb = b"".join([
        struct.pack("<III", _MAGIC, 2, total),
        struct.pack("<II", len(json_bytes), _CHUNK_JSON),
        json_bytes,
        struct.pack("<II", len(blob), _CHUNK_BIN),
        blob,
    ])

    if out is not None:
        try:
            with open(out, "wb") as fh:
                fh.write(glb)
        except OSError as exc:
            raise IoError(f"cannot write {out}: {exc}") from exc
    return glb


def _export_animation(clip, skeleton: Skeleton, add_accessor) -> dict:
    samplers: list[dict] = []
    channels: list[dict] = []

    def add_sampler(times: list[float], output: np.ndarray, type_: str) -> int:
        t = np.asarray(times, dtype="<f4").reshape(-1, 1)
        input_acc = add_accessor(t, _FLOAT, "SCALAR", minmax=True)
        output_acc = add_accessor(output.astype("<f4"), _FLOAT, type_)
        samplers.append({"input": input_acc, "interpolation": "LINEAR", "output": output_acc})
        return len(samplers) - 1

    for joint_name in sorted(clip.channels):
        keys = clip.channels[joint_name]
        if not skeleton.has(joint_name) or not keys:
            continue
        times = [k[0] for k in keys]
        eulers = np.array([[k[1], k[2], k[3]] for k in keys], dtype=np.float64)
        quats = _euler_to_quat(eulers)
        sampler = add_sampler(times, quats, "VEC4")
        channels.append({
            "sampler": sampler,
            "target": {"node": skeleton.index(joint_name), "path": "rotation"},
        })

    root_keys = getattr(clip, "root_translation", None) or []
    if root_keys:
        bind_t = skeleton.joints[0].bind_matrix[:3, 3]
        times = [k[0] for k in root_keys]
        offsets = np.array([[k[1], k[2], k[3]] for k in root_keys], dtype=np.float64)
        sampler = add_sampler(times, offsets + bind_t, "VEC3")
        channels.append({"sampler": sampler, "target": {"node": 0, "path": "translation"}})

    return {"name": clip.name, "channels": channels, "samplers": samplers}
