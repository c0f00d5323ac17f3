"""Asset pack runtime: loads base mesh, skeleton, delta blocks, and assets.

All geometry files are line-oriented text for diffability. Floats are written
with repr() so read(write(x)) round-trips bit-exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import PackError, PackIoError
from .mesh import Mesh, compute_normals, MAX_INFLUENCES
from .registry import AssetInfo, ParameterRegistry, load_registry, _read_meta
from .skeleton import Joint, Skeleton

DeltaBlock = tuple[np.ndarray, np.ndarray]   # (indices int64, offsets (K,3) float64)


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# delta blocks: one "index dx dy dz" line per displaced vertex

def write_delta(path: str, indices: np.ndarray, offsets: np.ndarray) -> None:
    lines = [
        f"{int(i)} {_fmt(o[0])} {_fmt(o[1])} {_fmt(o[2])}"
        for i, o in zip(indices, offsets)
    ]
    _write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def read_delta(path: str) -> DeltaBlock:
    indices: list[int] = []
    offsets: list[tuple[float, float, float]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 4:
                raise PackError(f"{path}:{lineno}: expected 'index dx dy dz'")
            indices.append(int(parts[0]))
            offsets.append((float(parts[1]), float(parts[2]), float(parts[3])))
    return (
        np.asarray(indices, dtype=np.int64),
        np.asarray(offsets, dtype=np.float64).reshape(len(indices), 3),
    )


# ---------------------------------------------------------------------------
# mesh files

def write_mesh(path: str, mesh: Mesh) -> None:
    out = [f"forge-mesh 1", f"verts {mesh.vertex_count}"]
    for v in mesh.vertices:
        out.append(f"v {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}")
    out.append(f"tris {mesh.triangle_count}")
    for t in mesh.triangles:
        out.append(f"t {t[0]} {t[1]} {t[2]}")
    if mesh.skin_weights is not None:
        out.append("weights")
        for j, w in zip(mesh.skin_joints, mesh.skin_weights):
            pairs = " ".join(f"{int(ji)} {_fmt(wi)}" for ji, wi in zip(j, w))
            out.append(f"w {pairs}")
    for name, idx in mesh.groups.items():
        out.append(f"group {name} " + " ".join(str(int(i)) for i in idx))
    _write_text(path, "\n".join(out) + "\n")


def read_mesh(path: str) -> Mesh:
    verts: list = []
    tris: list = []
    joints: list = []
    weights: list = []
    groups: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("forge-mesh"):
            raise PackError(f"{path}: not a forge mesh file")
        for lineno, line in enumerate(fh, 2):
            parts = line.split()
            if not parts:
                continue
            tag = parts[0]
            if tag == "v":
                verts.append((float(parts[1]), float(parts[2]), float(parts[3])))
            elif tag == "t":
                tris.append((int(parts[1]), int(parts[2]), int(parts[3])))
            elif tag == "w":
                vals = parts[1:]
                j = [int(vals[i]) for i in range(0, len(vals), 2)]
                w = [float(vals[i]) for i in range(1, len(vals), 2)]
                j += [0] * (MAX_INFLUENCES - len(j))
                w += [0.0] * (MAX_INFLUENCES - len(w))
                joints.append(j)
                weights.append(w)
            elif tag == "group":
                groups[parts[1]] = np.asarray([int(x) for x in parts[2:]], dtype=np.int32)
            elif tag in ("verts", "tris", "weights"):
                continue
            else:
                raise PackError(f"{path}:{lineno}: unknown record {tag!r}")
    vertices = np.asarray(verts, dtype=np.float64).reshape(len(verts), 3)
    triangles = np.asarray(tris, dtype=np.int32).reshape(len(tris), 3)
    mesh = Mesh(
        vertices=vertices,
        triangles=triangles,
        normals=compute_normals(vertices, triangles),
        skin_joints=np.asarray(joints, dtype=np.int32) if joints else None,
        skin_weights=np.asarray(weights, dtype=np.float64) if weights else None,
        groups=groups,
    )
    return mesh


# ---------------------------------------------------------------------------
# skeleton file: "joint <name> <parent index> <x> <y> <z>" per line

def write_skeleton(path: str, skeleton: Skeleton) -> None:
    out = ["forge-skeleton 1"]
    for j in skeleton.joints:
        p = j.bind_matrix[:3, 3]
        out.append(f"joint {j.name} {j.parent} {_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}")
    _write_text(path, "\n".join(out) + "\n")


def read_skeleton(path: str) -> Skeleton:
    joints: list[Joint] = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("forge-skeleton"):
            raise PackError(f"{path}: not a forge skeleton file")
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] != "joint" or len(parts) != 6:
                raise PackError(f"{path}: malformed joint line {line.strip()!r}")
            m = np.eye(4)
            m[:3, 3] = [float(parts[3]), float(parts[4]), float(parts[5])]
            joints.append(Joint(parts[1], int(parts[2]), m))
    skel = Skeleton(joints)
    skel.validate()
    return skel


def _write_text(path: str, text: str) -> None:
    try:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise PackIoError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# runtime pack

@dataclass
class AssetMesh:
    info: AssetInfo
    mesh: Mesh
    deltas: dict[str, DeltaBlock] = field(default_factory=dict)


@dataclass
class Pack:
    root: str
    registry: ParameterRegistry
    base_mesh: Mesh
    skeleton: Skeleton
    deltas: dict[str, DeltaBlock]
    assets: dict[str, AssetMesh]

    @classmethod
    def load(cls, pack_path: str) -> "Pack":
        registry = load_registry(pack_path)
        base_mesh = read_mesh(os.path.join(pack_path, "base.mesh"))
        skeleton = read_skeleton(os.path.join(pack_path, "skeleton.txt"))
        base_mesh.validate(joint_count=skeleton.joint_count)
        deltas = {
            k.name: read_delta(os.path.join(pack_path, k.delta_ref))
            for k in registry.keys.values()
        }
        assets: dict[str, AssetMesh] = {}
        for asset_id, info in registry.assets.items():
            asset_dir = os.path.join(pack_path, asset_id)
            mesh = read_mesh(os.path.join(asset_dir, "mesh.txt"))
            # Asset delta files reuse the basename of the key's base delta_ref.
            asset_deltas: dict[str, DeltaBlock] = {}
            for k in registry.keys.values():
                dpath = os.path.join(asset_dir, "deltas", os.path.basename(k.delta_ref))
                if os.path.isfile(dpath):
                    asset_deltas[k.name] = read_delta(dpath)
            assets[asset_id] = AssetMesh(info=info, mesh=mesh, deltas=asset_deltas)
        return cls(
            root=pack_path,
            registry=registry,
            base_mesh=base_mesh,
            skeleton=skeleton,
            deltas=deltas,
            assets=assets,
        )
