"""Shape-key delta baking from region masks.

A delta block is a sparse per-vertex displacement field: vertices whose mask
weight is zero are omitted. All modes are linear in amplitude, which is what
makes blend-shape superposition exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UnknownMask

MODES = ("normal_offset", "axis_scale", "translate", "shear")


@dataclass
class DeltaRecipe:
    key: str
    mask: str
    mode: str                      # one of MODES
    amplitude: float               # cm for offsets, scale factor per unit otherwise
    axis: tuple[float, float, float] | None = None
    shear_from: tuple[float, float, float] | None = None  # shear only

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown delta mode {self.mode!r}")
        if not np.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")
        if self.mode in ("axis_scale", "translate", "shear") and self.axis is None:
            raise ValueError(f"mode {self.mode!r} requires an axis")
        if self.mode == "shear" and self.shear_from is None:
            raise ValueError("shear requires a shear_from axis")


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise ValueError("axis must be non-zero")
    return v / n


def bake_delta(
    recipe: DeltaRecipe,
    vertices: np.ndarray,
    normals: np.ndarray,
    masks: dict[str, np.ndarray],
) -> tuple[np.ndarray, np.ndarray]:
    """Bake one recipe into (indices, offsets).

    normal_offset: d(v) = mask(v) * amplitude * n(v)
    axis_scale:    d(v) = mask(v) * amplitude * ((v - c) . a) * a, c = mask centroid
    translate:     d(v) = mask(v) * amplitude * a
    shear:         d(v) = mask(v) * amplitude * ((v - c) . f) * a
    """
    w = masks.get(recipe.mask)
    if w is None:
        raise UnknownMask(f"recipe for key {recipe.key!r} references unknown mask {recipe.mask!r}")
    idx = np.nonzero(w)[0]
    if recipe.amplitude == 0.0 or idx.size == 0:
        return np.empty(0, dtype=np.int64), np.empty((0, 3))

    wa = (w[idx] * recipe.amplitude)[:, None]
    if recipe.mode == "normal_offset":
        offsets = wa * normals[idx]
    elif recipe.mode == "translate":
        offsets = wa * _unit(recipe.axis)
    else:
        centroid = (vertices[idx] * w[idx, None]).sum(axis=0) / w[idx].sum()
        rel = vertices[idx] - centroid
        if recipe.mode == "axis_scale":
            a = _unit(recipe.axis)
            offsets = wa * (rel @ a)[:, None] * a
        else:  # shear
            a = _unit(recipe.axis)
            f = _unit(recipe.shear_from)
            offsets = wa * (rel @ f)[:, None] * a

    keep = np.linalg.norm(offsets, axis=1) > 0
    return idx[keep].astype(np.int64), offsets[keep]
