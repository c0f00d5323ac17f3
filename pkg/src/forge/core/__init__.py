from .mesh import Mesh, compute_normals, measure_height
from .skeleton import Skeleton, Joint, CANONICAL_JOINTS, euler_xyz_deg_to_matrix
from .registry import (
    KeyDef,
    SlotDef,
    PresetDef,
    AttributeBinding,
    ParameterRegistry,
    load_registry,
)
from .pack import Pack, AssetMesh
from .state import AvatarState, Warning, new_avatar, set_key, set_height, set_age, set_slot, set_pose, state_hash
from .evaluate import evaluate
from .gltf import export_gltf

__all__ = [
    "Mesh", "compute_normals", "measure_height",
    "Skeleton", "Joint", "CANONICAL_JOINTS", "euler_xyz_deg_to_matrix",
    "KeyDef", "SlotDef", "PresetDef", "AttributeBinding", "ParameterRegistry", "load_registry",
    "Pack", "AssetMesh",
    "AvatarState", "Warning", "new_avatar", "set_key", "set_height", "set_age",
    "set_slot", "set_pose", "state_hash",
    "evaluate", "export_gltf",
]
