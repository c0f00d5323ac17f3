from .builder import BaseBuild, build_base_mesh
from .deltas import DeltaRecipe, bake_delta
from .pack import build_pack

__all__ = ["BaseBuild", "build_base_mesh", "DeltaRecipe", "bake_delta", "build_pack"]
