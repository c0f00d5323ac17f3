"""Parameter registry: the machine-readable catalog of everything the
generator can do — keys, slots, presets, aliases, and the attribute bindings
the rule critic evaluates.

The on-disk form is `registry.manifest`, a block-structured text file (see
`forge.assets.pack` for the writer). Loading is pure and verifies every
invariant, including that each key's delta block exists in the pack.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from ..errors import (
    DanglingDeltaRef,
    DuplicateKey,
    ManifestError,
    MissingManifest,
)

CATEGORIES = ("body", "face")

HEIGHT_RANGE = (140.0, 220.0)
AGE_RANGE = (18.0, 80.0)
DEFAULT_AGE = 25.0


@dataclass
class KeyDef:
    name: str
    category: str               # body | face
    lo: float
    hi: float
    default: float
    delta_ref: str              # pack-relative path of the delta block
    description: str
    tags: list[str] = field(default_factory=list)


@dataclass
class SlotDef:
    name: str
    description: str = ""


@dataclass
class PresetDef:
    name: str
    key_values: dict[str, float] = field(default_factory=dict)
    height_cm: float | None = None
    age_years: float | None = None
    slots: dict[str, str] = field(default_factory=dict)


@dataclass
class AttributeBinding:
    """Predicate binding one semantic attribute to avatar state.

    attribute: 'build=athletic', 'height=very_tall', 'clothing', ...
    predicate: whitespace tokens, e.g. ('key_min', 'muscular', '0.6').
    """

    attribute: str
    predicate: tuple[str, ...]


@dataclass
class AssetInfo:
    id: str                     # pack-relative directory path, e.g. outfits/male/sports/gym_outfit
    slot: str
    tags: list[str]
    description: str = ""


@dataclass
class ParameterRegistry:
    base_height_cm: float
    keys: dict[str, KeyDef]
    slots: dict[str, SlotDef]
    presets: dict[str, PresetDef]
    bindings: list[AttributeBinding]
    aliases: dict[str, str]             # key-name alias -> field (height_cm | age_years)
    assets: dict[str, AssetInfo]

    def key_names(self) -> list[str]:
        return list(self.keys)

    def keys_in_category(self, category: str) -> list[KeyDef]:
        return [k for k in self.keys.values() if k.category == category]

    def aging_keys(self) -> list[KeyDef]:
        return [k for k in self.keys.values() if "aging" in k.tags]

    def assets_for_slot(self, slot: str) -> list[AssetInfo]:
        return [a for a in self.assets.values() if a.slot == slot]

    def binding_for(self, attribute: str) -> AttributeBinding | None:
        for b in self.bindings:
            if b.attribute == attribute:
                return b
        return None

    def suggest(self, name: str, n: int = 5) -> list[str]:
        """The n registry key names nearest to `name` by edit distance."""
        scored = sorted(
            self.keys, key=lambda k: (_edit_distance(name.lower(), k.lower()), k)
        )
        return scored[:n]

    def digest(self) -> str:
        """One line per key/slot, fed to the agent prompt."""
        lines = []
        for k in self.keys.values():
            lines.append(
                f"{k.category}.{_quote_if_spaced(k.name)} range [{k.lo:g}, {k.hi:g}] "
                f"default {k.default:g} - {k.description}"
            )
        for s in self.slots.values():
            assets = ", ".join(a.id for a in self.assets_for_slot(s.name))
            lines.append(f"slot {s.name}: assets: {assets}")
        for p in self.presets.values():
            lines.append(f"preset {p.name}")
        return "\n".join(lines)

    def validate(self, pack_root: str | None = None) -> None:
        for k in self.keys.values():
            if k.category not in CATEGORIES:
                raise ManifestError(f"key {k.name!r}: bad category {k.category!r}")
            if not k.lo < k.hi:
                raise ManifestError(f"key {k.name!r}: empty range [{k.lo}, {k.hi}]")
            if not k.lo <= k.default <= k.hi:
                raise ManifestError(f"key {k.name!r}: default outside range")
            if not k.description.strip():
                raise ManifestError(f"key {k.name!r}: description must be non-empty")
            if pack_root is not None and not os.path.isfile(os.path.join(pack_root, k.delta_ref)):
                raise DanglingDeltaRef(k.name, k.delta_ref)
        for p in self.presets.values():
            for key in p.key_values:
                if key not in self.keys:
                    raise ManifestError(f"preset {p.name!r} sets unknown key {key!r}")
            for slot, asset in p.slots.items():
                if slot not in self.slots:
                    raise ManifestError(f"preset {p.name!r} uses unknown slot {slot!r}")
                if asset not in self.assets:
                    raise ManifestError(f"preset {p.name!r} uses unknown asset {asset!r}")
        for a in self.assets.values():
            if a.slot not in self.slots:
                raise ManifestError(f"asset {a.id!r} tagged for unknown slot {a.slot!r}")


def _quote_if_spaced(name: str) -> str:
    return f'"{name}"' if " " in name else name


def _edit_distance(a: str, b: str) -> int:
    """Levenshtein distance, iterative two-row form."""
    if a == b:
        return 0
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


# ---------------------------------------------------------------------------
# manifest parsing

def parse_manifest(text: str, source: str = "registry.manifest") -> ParameterRegistry:
    blocks = _split_blocks(text, source)
    base_height = 175.0
    keys: dict[str, KeyDef] = {}
    slots: dict[str, SlotDef] = {}
    presets: dict[str, PresetDef] = {}
    bindings: list[AttributeBinding] = []
    aliases: dict[str, str] = {}

    for kind, fields, lineno in blocks:
        if kind == "pack":
            base_height = float(_one(fields, "base_height_cm", lineno))
        elif kind == "key":
            name = _one(fields, "name", lineno)
            if name in keys:
                raise DuplicateKey(name)
            lo_hi = _one(fields, "range", lineno).split()
            if len(lo_hi) != 2:
                raise ManifestError(f"line {lineno}: range needs two numbers")
            keys[name] = KeyDef(
                name=name,
                category=_one(fields, "category", lineno),
                lo=float(lo_hi[0]),
                hi=float(lo_hi[1]),
                default=float(_one(fields, "default", lineno)),
                delta_ref=_one(fields, "delta", lineno),
                description=_one(fields, "desc", lineno),
                tags=_one(fields, "tags", lineno, default="").split(),
            )
        elif kind == "slot":
            name = _one(fields, "name", lineno)
            if name in slots:
                raise ManifestError(f"line {lineno}: duplicate slot {name!r}")
            slots[name] = SlotDef(name=name, description=_one(fields, "desc", lineno, default=""))
        elif kind == "preset":
            name = _one(fields, "name", lineno)
            if name in presets:
                raise ManifestError(f"line {lineno}: duplicate preset {name!r}")
            preset = PresetDef(name=name)
            for fname, values in fields.items():
                for value in values:
                    if fname == "name":
                        continue
                    elif fname == "height_cm":
                        preset.height_cm = float(value)
                    elif fname == "age_years":
                        preset.age_years = float(value)
                    elif fname.startswith("key "):
                        preset.key_values[fname[4:]] = float(value)
                    elif fname.startswith("slot "):
                        preset.slots[fname[5:]] = value
                    else:
                        raise ManifestError(f"line {lineno}: unknown preset field {fname!r}")
            presets[name] = preset
        elif kind == "alias":
            aliases[_one(fields, "name", lineno)] = _one(fields, "target", lineno)
        elif kind == "bind":
            bindings.append(
                AttributeBinding(
                    attribute=_one(fields, "attribute", lineno),
                    predicate=tuple(_one(fields, "predicate", lineno).split()),
                )
            )
        else:
            raise ManifestError(f"line {lineno}: unknown block [{kind}]")

    return ParameterRegistry(
        base_height_cm=base_height,
        keys=keys,
        slots=slots,
        presets=presets,
        bindings=bindings,
        aliases=aliases,
        assets={},
    )


def _split_blocks(text: str, source: str):
    blocks = []
    kind = None
    fields: dict[str, list[str]] = {}
    start = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            if kind is not None:
                blocks.append((kind, fields, start))
            kind = line[1:-1].strip()
            fields = {}
            start = lineno
        else:
            if kind is None:
                raise ManifestError(f"{source}:{lineno}: field outside any block")
            if "=" not in line:
                raise ManifestError(f"{source}:{lineno}: expected 'field = value'")
            fname, _, value = line.partition("=")
            fields.setdefault(fname.strip(), []).append(value.strip())
    if kind is not None:
        blocks.append((kind, fields, start))
    return blocks


def _one(fields: dict[str, list[str]], name: str, lineno: int, default: str | None = None) -> str:
    values = fields.get(name)
    if not values:
        if default is not None:
            return default
        raise ManifestError(f"block at line {lineno}: missing field {name!r}")
    return values[0]


def load_registry(pack_path: str) -> ParameterRegistry:
    """Load and fully validate a pack's registry. Pure: no global state."""
    manifest = os.path.join(pack_path, "registry.manifest")
    if not os.path.isfile(manifest):
        raise MissingManifest(f"no registry.manifest under {pack_path!r}")
    with open(manifest, encoding="utf-8") as fh:
        registry = parse_manifest(fh.read(), source=manifest)
    registry.assets = _scan_assets(pack_path)
    registry.validate(pack_root=pack_path)
    return registry


def _scan_assets(pack_path: str) -> dict[str, AssetInfo]:
    assets: dict[str, AssetInfo] = {}
    for category in ("outfits", "footwear", "hair"):
        base = os.path.join(pack_path, category)
        if not os.path.isdir(base):
            continue
        for dirpath, _dirnames, filenames in sorted(os.walk(base)):
            if "asset.meta" not in filenames:
                continue
            asset_id = os.path.relpath(dirpath, pack_path).replace(os.sep, "/")
            meta = _read_meta(os.path.join(dirpath, "asset.meta"))
            assets[asset_id] = AssetInfo(
                id=asset_id,
                slot=meta.get("slot", ""),
                tags=meta.get("tags", "").split(),
                description=meta.get("desc", ""),
            )
    return dict(sorted(assets.items()))


def _read_meta(path: str) -> dict[str, str]:
    meta: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            name, _, value = line.partition("=")
            meta[name.strip()] = value.strip()
    return meta
