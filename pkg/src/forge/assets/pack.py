"""Builds the complete on-disk asset pack: registry manifest, base mesh,
skeleton, baked shape-key deltas, and clothing/footwear/hair shells.

Everything is generated; the repo ships no binary art. Clothing assets are
shells extracted from base-mesh regions and offset along the normal, so they
inherit skin weights and (restricted) shape-key deltas and follow the body
through blending and skinning for free.
"""

from __future__ import annotations

import os

import numpy as np

from ..core.mesh import Mesh
from ..core.pack import write_delta, write_mesh, write_skeleton, _write_text
from .builder import BaseBuild, build_base_mesh
from .deltas import DeltaRecipe, bake_delta

X = (1.0, 0.0, 0.0)
Y = (0.0, 1.0, 0.0)
Z = (0.0, 0.0, 1.0)

# name, category, mask, mode, amplitude, axis, shear_from, tags, description
KEY_TABLE = [
    ("muscular", "body", "muscles", "normal_offset", 3.0, None, None, "muscle",
     "Overall muscle definition across chest, shoulders, arms and legs."),
    ("Shoulder Width", "body", "shoulders", "axis_scale", 0.35, X, None, "width",
     "Widens or narrows the shoulder span."),
    ("Chest Muscles", "body", "chest", "normal_offset", 2.5, None, None, "muscle",
     "Pectoral volume."),
    ("Biceps", "body", "biceps", "normal_offset", 2.2, None, None, "muscle",
     "Upper-arm muscle volume."),
    ("Traps Muscles", "body", "traps", "normal_offset", 2.0, None, None, "muscle",
     "Trapezius bulk between neck and shoulders."),
    ("Quad Muscles", "body", "quads", "normal_offset", 2.4, None, None, "muscle",
     "Front-of-thigh muscle volume."),
    ("overweight", "body", "fat", "normal_offset", 4.5, None, None, "weight",
     "Body fat all over; negative values give a lean physique."),
    ("Thigh Thickness", "body", "thighs", "normal_offset", 2.6, None, None, "legs",
     "Thigh girth."),
    ("Calf Muscles", "body", "calves", "normal_offset", 2.0, None, None, "muscle legs",
     "Calf muscle volume."),
    ("belly_size", "body", "belly", "normal_offset", 4.0, None, None, "weight",
     "Belly protrusion."),
    ("waist_width", "body", "waist", "axis_scale", 0.3, X, None, "width",
     "Waist width."),
    ("hip_width", "body", "hips", "axis_scale", 0.3, X, None, "width",
     "Hip width."),
    ("neck_thickness", "body", "neck", "normal_offset", 1.8, None, None, "",
     "Neck girth."),
    ("arm_thickness", "body", "arms", "normal_offset", 1.8, None, None, "",
     "Whole-arm girth."),
    ("forearm_thickness", "body", "forearms", "normal_offset", 1.5, None, None, "",
     "Forearm girth."),
    ("torso_depth", "body", "torso", "axis_scale", 0.25, Z, None, "",
     "Front-to-back torso depth."),
    ("chest_width", "body", "chest", "axis_scale", 0.25, X, None, "width",
     "Ribcage width."),
    ("shoulder_slope", "body", "shoulders", "translate", -3.0, Y, None, "",
     "Drops the shoulder line; negative values square it up."),
    ("leg_length", "body", "legs", "axis_scale", 0.12, Y, None, "legs",
     "Stretches the legs vertically."),
    ("arm_length", "body", "arms", "axis_scale", 0.12, X, None, "",
     "Stretches the arms along their length."),
    ("hand_size", "body", "hands", "normal_offset", 1.2, None, None, "",
     "Hand volume."),
    ("feminine", "body", "feminine_shape", "normal_offset", 2.2, None, None, "build",
     "Softer silhouette with fuller chest and hips; negative reads masculine."),
    ("jaw_width", "face", "jaw", "axis_scale", 0.35, X, None, "",
     "Jaw width; positive gives a strong jawline."),
    ("cheek_fullness", "face", "cheeks", "normal_offset", 1.6, None, None, "",
     "Cheek volume; negative gives a leaner face."),
    ("eye_tilt", "face", "eyes", "shear", 0.35, Y, X, "",
     "Tilts the eye line; small negative values read focused."),
    ("browridge_loc_vertical", "face", "brow", "translate", 1.2, Y, None, "",
     "Raises or lowers the brow ridge."),
    ("eye_size", "face", "eyes", "normal_offset", 0.8, None, None, "",
     "Eye region prominence."),
    ("eye_distance", "face", "eyes", "axis_scale", 0.25, X, None, "",
     "Spreads the eyes apart or pulls them together."),
    ("nose_size", "face", "nose", "normal_offset", 0.9, None, None, "",
     "Nose volume."),
    ("nose_length", "face", "nose", "translate", 1.0, Z, None, "",
     "Nose projection forward."),
    ("lip_fullness", "face", "lips", "normal_offset", 0.7, None, None, "",
     "Lip volume."),
    ("chin_length", "face", "chin", "translate", -1.2, Y, None, "",
     "Lengthens the chin downward."),
    ("chin_width", "face", "chin", "axis_scale", 0.3, X, None, "",
     "Chin width."),
    ("forehead_height", "face", "forehead", "axis_scale", 0.25, Y, None, "",
     "Forehead height."),
    ("face_width", "face", "face", "axis_scale", 0.2, X, None, "",
     "Overall face width."),
    ("brow_thickness", "face", "brow", "normal_offset", 0.6, None, None, "",
     "Brow ridge prominence."),
    ("beard", "face", "beard_zone", "normal_offset", 1.4, None, None, "hair",
     "Geometric beard volume on jaw and chin."),
    ("age_gauntness", "face", "cheeks", "normal_offset", -1.2, None, None, "aging",
     "Sunken cheeks driven by age."),
    ("age_brow_sag", "face", "brow", "translate", -0.8, Y, None, "aging",
     "Brow droop driven by age."),
    ("age_jowls", "face", "jaw", "normal_offset", 0.9, None, None, "aging",
     "Jowl volume driven by age."),
]

SLOT_TABLE = [
    ("outfit", "Main clothing layer covering torso and legs."),
    ("footwear", "Shoes."),
    ("hair", "Hairstyle."),
]

# id, slot, tags, description, region predicate over authored coords (x, y, z)
ASSET_TABLE = [
    ("outfits/male/sports/gym_outfit", "outfit", "sports male gym",
     "Sleeveless gym top with shorts.",
     lambda p: ((95 <= p[1] <= 147) & (abs(p[0]) <= 33)) | ((55 <= p[1] <= 97) & (abs(p[0]) <= 26))),
    ("outfits/female/casual/summer_dress", "outfit", "casual female dress",
     "Knee-length summer dress.",
     lambda p: (40 <= p[1] <= 147) & (abs(p[0]) <= 30)),
    ("outfits/unisex/casual/red_jacket", "outfit", "casual jacket red",
     "Zip-up jacket with full sleeves.",
     lambda p: ((100 <= p[1] <= 150) & (abs(p[0]) <= 33)) | (130 <= p[1] <= 150)),
    ("footwear/male/sports/running_shoe_2", "footwear", "sports running shoe",
     "Cushioned running shoes.",
     lambda p: p[1] <= 14),
    ("footwear/unisex/casual/sneaker", "footwear", "casual shoe",
     "Plain low-top sneakers.",
     lambda p: p[1] <= 13),
    ("hair/short/crop", "hair", "short",
     "Close-cropped hair.",
     lambda p: p[1] >= 167),
    ("hair/long/ponytail", "hair", "long",
     "Long hair pulled back.",
     lambda p: p[1] >= 164),
]

SHELL_OFFSET_CM = 0.8

PRESETS = """\
[preset]
name = male_athletic
key muscular = 0.5
key Shoulder Width = 0.4
key feminine = -0.5
height_cm = 185.0
age_years = 28.0
slot outfit = outfits/male/sports/gym_outfit
slot footwear = footwear/male/sports/running_shoe_2

[preset]
name = female_default
key feminine = 0.6
height_cm = 165.0
age_years = 30.0
slot hair = hair/long/ponytail
"""

BINDINGS = """\
[bind]
attribute = build=slim
predicate = key_max overweight -0.2

[bind]
attribute = build=average
predicate = key_between overweight -0.3 0.3

[bind]
attribute = build=athletic
predicate = key_min muscular 0.6

[bind]
attribute = build=muscular
predicate = key_min muscular 0.6

[bind]
attribute = build=heavy
predicate = key_min overweight 0.5

[bind]
attribute = height=short
predicate = height_max 160

[bind]
attribute = height=average
predicate = height_between 160 180

[bind]
attribute = height=tall
predicate = height_min 180

[bind]
attribute = height=very_tall
predicate = height_min 190

[bind]
attribute = height_numeric
predicate = height_tolerance 5

[bind]
attribute = age_numeric
predicate = age_tolerance 5

[bind]
attribute = facial_hair=beard
predicate = key_min beard 0.3

[bind]
attribute = facial_hair=none
predicate = key_max beard 0.1

[bind]
attribute = sex=male
predicate = key_max feminine -0.2

[bind]
attribute = sex=female
predicate = key_min feminine 0.2

[bind]
attribute = clothing
predicate = slot_descriptor_tags

[bind]
attribute = hair
predicate = slot_descriptor_tags hair
"""


def delta_slug(key_name: str) -> str:
    return key_name.lower().replace(" ", "_")


def build_pack(out: str, resolution: int = 1) -> str:
    """Build a loadable pack under `out`. Deterministic per resolution."""
    build = build_base_mesh(resolution)
    mesh, skeleton, masks = build.mesh, build.skeleton, build.masks

    os.makedirs(out, exist_ok=True)
    write_mesh(os.path.join(out, "base.mesh"), mesh)
    write_skeleton(os.path.join(out, "skeleton.txt"), skeleton)

    baked: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for name, _cat, mask, mode, amp, axis, shear_from, _tags, _desc in KEY_TABLE:
        recipe = DeltaRecipe(key=name, mask=mask, mode=mode, amplitude=amp,
                             axis=axis, shear_from=shear_from)
        idx, offsets = bake_delta(recipe, mesh.vertices, mesh.normals, masks)
        baked[name] = (idx, offsets)
        write_delta(os.path.join(out, "deltas", delta_slug(name) + ".delta"), idx, offsets)

    for asset_id, slot, tags, desc, region in ASSET_TABLE:
        _write_asset(out, asset_id, slot, tags, desc, region, mesh, baked)

    _write_text(os.path.join(out, "registry.manifest"), _manifest_text())
    return out


def _manifest_text() -> str:
    parts = [
        "# forge asset pack registry (generated)",
        "",
        "[pack]",
        "base_height_cm = 175.0",
        "",
        "[alias]",
        "name = Height",
        "target = height_cm",
        "",
        "[alias]",
        "name = Age",
        "target = age_years",
        "",
    ]
    for name, desc in SLOT_TABLE:
        parts += ["[slot]", f"name = {name}", f"desc = {desc}", ""]
    for name, cat, _mask, _mode, _amp, _axis, _shear, tags, desc in KEY_TABLE:
        parts += [
            "[key]",
            f"name = {name}",
            f"category = {cat}",
            "range = -1.0 1.0",
            "default = 0.0",
            f"delta = deltas/{delta_slug(name)}.delta",
        ]
        if tags:
            parts.append(f"tags = {tags}")
        parts += [f"desc = {desc}", ""]
    parts += [PRESETS, BINDINGS]
    return "\n".join(parts)


def _write_asset(out, asset_id, slot, tags, desc, region, base: Mesh, baked) -> None:
    verts = base.vertices
    inside = np.array([bool(region((v[0], v[1], v[2]))) for v in verts])
    tri_keep = inside[base.triangles].all(axis=1)
    faces = base.triangles[tri_keep]
    used = np.unique(faces)
    remap = np.full(len(verts), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))

    shell_verts = verts[used] + SHELL_OFFSET_CM * base.normals[used]
    shell_faces = remap[faces].astype(np.int32)
    shell = Mesh(
        vertices=shell_verts,
        triangles=shell_faces,
        normals=base.normals[used].copy(),
        skin_joints=base.skin_joints[used].copy(),
        skin_weights=base.skin_weights[used].copy(),
    )
    if shell.vertex_count == 0:
        raise AssertionError(f"asset {asset_id!r} selects no geometry at this resolution")

    asset_dir = os.path.join(out, asset_id)
    write_mesh(os.path.join(asset_dir, "mesh.txt"), shell)
    _write_text(
        os.path.join(asset_dir, "asset.meta"),
        f"slot = {slot}\ntags = {tags}\ndesc = {desc}\n",
    )
    for key, (idx, offsets) in baked.items():
        mask = np.isin(idx, used)
        if not mask.any():
            continue
        write_delta(
            os.path.join(asset_dir, "deltas", delta_slug(key) + ".delta"),
            remap[idx[mask]],
            offsets[mask],
        )
