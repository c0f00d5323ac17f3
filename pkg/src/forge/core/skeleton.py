"""Canonical humanoid skeleton and pose math.

Joints are stored in topological order (parents before children) with global
bind transforms. Poses are local XYZ Euler rotations in degrees about each
joint's bind position; posed globals compose down the hierarchy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import GeometryError

CANONICAL_JOINTS = [
    "root",
    "pelvis",
    "spine",
    "chest",
    "neck",
    "head",
    "l_shoulder",
    "l_elbow",
    "l_wrist",
    "r_shoulder",
    "r_elbow",
    "r_wrist",
    "l_hip",
    "l_knee",
    "l_ankle",
    "r_hip",
    "r_knee",
    "r_ankle",
]

# Bind-pose joint positions of the canonical 175 cm figure (cm, y up,
# T-pose with arms along +/-x). Packs at any resolution share these, so
# motion clips retarget identically everywhere.
CANONICAL_POSITIONS = {
    "root": (0.0, 0.0, 0.0),
    "pelvis": (0.0, 95.0, 0.0),
    "spine": (0.0, 112.0, 0.0),
    "chest": (0.0, 128.0, 0.0),
    "neck": (0.0, 144.0, 0.0),
    "head": (0.0, 155.0, 0.0),
    "l_shoulder": (18.0, 140.0, 0.0),
    "l_elbow": (45.0, 140.0, 0.0),
    "l_wrist": (66.0, 140.0, 0.0),
    "r_shoulder": (-18.0, 140.0, 0.0),
    "r_elbow": (-45.0, 140.0, 0.0),
    "r_wrist": (-66.0, 140.0, 0.0),
    "l_hip": (9.0, 92.0, 0.0),
    "l_knee": (10.0, 50.0, 0.0),
    "l_ankle": (10.0, 10.0, 0.0),
    "r_hip": (-9.0, 92.0, 0.0),
    "r_knee": (-10.0, 50.0, 0.0),
    "r_ankle": (-10.0, 10.0, 0.0),
}

CANONICAL_PARENTS = {
    "root": None,
    "pelvis": "root",
    "spine": "pelvis",
    "chest": "spine",
    "neck": "chest",
    "head": "neck",
    "l_shoulder": "chest",
    "l_elbow": "l_shoulder",
    "l_wrist": "l_elbow",
    "r_shoulder": "chest",
    "r_elbow": "r_shoulder",
    "r_wrist": "r_elbow",
    "l_hip": "pelvis",
    "l_knee": "l_hip",
    "l_ankle": "l_knee",
    "r_hip": "pelvis",
    "r_knee": "r_hip",
    "r_ankle": "r_knee",
}


def euler_xyz_deg_to_matrix(rx: float, ry: float, rz: float) -> np.ndarray:
    """XYZ Euler (degrees) to a 3x3 rotation: x applied first, then y, then z."""
    ax, ay, az = np.radians([rx, ry, rz])
    cx, sx = np.cos(ax), np.sin(ax)
    cy, sy = np.cos(ay), np.sin(ay)
    cz, sz = np.cos(az), np.sin(az)
    mx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    my = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    mz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return mz @ my @ mx


@dataclass
class Joint:
    name: str
    parent: int                 # index into Skeleton.joints, -1 for the root
    bind_matrix: np.ndarray     # (4, 4) global bind transform


@dataclass
class Skeleton:
    joints: list[Joint] = field(default_factory=list)

    def __post_init__(self):
        self._index = {j.name: i for i, j in enumerate(self.joints)}

    @property
    def joint_count(self) -> int:
        return len(self.joints)

    @property
    def names(self) -> list[str]:
        return [j.name for j in self.joints]

    def index(self, name: str) -> int:
        return self._index[name]

    def has(self, name: str) -> bool:
        return name in self._index

    def bind_position(self, name: str) -> np.ndarray:
        return self.joints[self.index(name)].bind_matrix[:3, 3]

    def validate(self) -> None:
        roots = [j for j in self.joints if j.parent < 0]
        if len(roots) != 1:
            raise GeometryError(f"skeleton must have exactly one root, found {len(roots)}")
        for i, j in enumerate(self.joints):
            if j.parent >= i:
                raise GeometryError(f"joint {j.name!r} appears before its parent")
            if abs(np.linalg.det(j.bind_matrix)) < 1e-12:
                raise GeometryError(f"bind transform of {j.name!r} is singular")

    def bind_globals(self) -> np.ndarray:
        return np.stack([j.bind_matrix for j in self.joints])

    def pose_globals(self, pose: dict[str, tuple[float, float, float]]) -> np.ndarray:
        """Global transforms for a pose of local Euler rotations (degrees).

        An empty pose (or angles of zero) reproduces the bind transforms.
        """
        binds = self.bind_globals()
        out = np.empty_like(binds)
        for i, joint in enumerate(self.joints):
            local_rot = np.eye(4)
            angles = pose.get(joint.name)
            if angles is not None:
                local_rot[:3, :3] = euler_xyz_deg_to_matrix(*angles)
            if joint.parent < 0:
                out[i] = binds[i] @ local_rot
            else:
                bind_local = np.linalg.solve(binds[joint.parent], binds[i])
                out[i] = out[joint.parent] @ bind_local @ local_rot
        return out

    def scaled(self, factor: float) -> "Skeleton":
        """Uniformly scale bind translations (rotations untouched)."""
        joints = []
        for j in self.joints:
            m = j.bind_matrix.copy()
            m[:3, 3] *= factor
            joints.append(Joint(j.name, j.parent, m))
        return Skeleton(joints)

    def leg_length(self) -> float:
        """hip -> knee -> ankle chain length (left side), for retargeting."""
        hip = self.bind_position("l_hip")
        knee = self.bind_position("l_knee")
        ankle = self.bind_position("l_ankle")
        return float(np.linalg.norm(knee - hip) + np.linalg.norm(ankle - knee))


def make_skeleton(positions: dict | None = None) -> Skeleton:
    """Build the canonical skeleton from joint positions (bind = translation)."""
    positions = positions or CANONICAL_POSITIONS
    joints = []
    for name in CANONICAL_JOINTS:
        parent_name = CANONICAL_PARENTS[name]
        parent = -1 if parent_name is None else CANONICAL_JOINTS.index(parent_name)
        m = np.eye(4)
        m[:3, 3] = positions[name]
        joints.append(Joint(name, parent, m))
    skel = Skeleton(joints)
    skel.validate()
    return skel
