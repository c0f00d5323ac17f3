"""Triangle mesh container and basic geometric queries.

Vertices are float64 (N, 3) arrays in centimeters, y up. Skinning data is
stored as fixed four-influence arrays; unused influences carry weight 0 and
joint index 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyMesh, GeometryError

MAX_INFLUENCES = 4
WEIGHT_SUM_TOL = 1e-6


@dataclass
class Mesh:
    vertices: np.ndarray          # (N, 3) float64, cm
    triangles: np.ndarray         # (M, 3) int32
    normals: np.ndarray | None = None          # (N, 3) float64, unit
    skin_joints: np.ndarray | None = None      # (N, 4) int32
    skin_weights: np.ndarray | None = None     # (N, 4) float64
    groups: dict[str, np.ndarray] = field(default_factory=dict)
    colors: np.ndarray | None = None           # (N, 3) float64 in [0, 1]

    @property
    def vertex_count(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def triangle_count(self) -> int:
        return int(self.triangles.shape[0])

    def copy(self) -> "Mesh":
        return Mesh(
            vertices=self.vertices.copy(),
            triangles=self.triangles.copy(),
            normals=None if self.normals is None else self.normals.copy(),
            skin_joints=None if self.skin_joints is None else self.skin_joints.copy(),
            skin_weights=None if self.skin_weights is None else self.skin_weights.copy(),
            groups={k: v.copy() for k, v in self.groups.items()},
            colors=None if self.colors is None else self.colors.copy(),
        )

    def validate(self, joint_count: int | None = None) -> None:
        """Raise GeometryError on any structural invariant violation."""
        n = self.vertex_count
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= n):
            raise GeometryError("triangle index out of range")
        for name, idx in self.groups.items():
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise GeometryError(f"group {name!r} index out of range")
        if self.skin_weights is not None:
            w = self.skin_weights
            if w.shape != (n, MAX_INFLUENCES):
                raise GeometryError("skin weight array has wrong shape")
            if (w < 0).any():
                raise GeometryError("negative skin weight")
            sums = w.sum(axis=1)
            if (np.abs(sums - 1.0) > WEIGHT_SUM_TOL).any():
                bad = int(np.abs(sums - 1.0).argmax())
                raise GeometryError(f"skin weights of vertex {bad} sum to {sums[bad]!r}")
            if joint_count is not None and self.skin_joints is not None:
                j = self.skin_joints
                if j.size and (j.min() < 0 or j.max() >= joint_count):
                    raise GeometryError("skin joint index out of range")


def compute_normals(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Area-weighted per-vertex normals; degenerate vertices get +y."""
    normals = np.zeros_like(vertices)
    if triangles.size:
        a = vertices[triangles[:, 0]]
        b = vertices[triangles[:, 1]]
        c = vertices[triangles[:, 2]]
        face = np.cross(b - a, c - a)  # length = 2 * area, weights by area
        for col in range(3):
            np.add.at(normals, triangles[:, col], face)
    lengths = np.linalg.norm(normals, axis=1)
    zero = lengths < 1e-12
    normals[zero] = (0.0, 1.0, 0.0)
    lengths[zero] = 1.0
    return normals / lengths[:, None]


def measure_height(mesh: Mesh) -> float:
    """Vertical extent (max_y - min_y) of the body group, in cm."""
    idx = mesh.groups.get("body")
    if idx is None:
        # Meshes without explicit groups are measured whole.
        if mesh.vertex_count == 0:
            raise EmptyMesh("mesh has no vertices")
        ys = mesh.vertices[:, 1]
    else:
        if idx.size == 0:
            raise EmptyMesh("body group is empty")
        ys = mesh.vertices[idx, 1]
    return float(ys.max() - ys.min())
