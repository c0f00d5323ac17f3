"""Semantic attribute extraction from text and image prompts.

The model is asked for a closed JSON schema; whatever it says beyond that
schema lands in `residual`. The typed fields are the rule critic's ground
truth, so invalid enum values trigger a repair round rather than being
silently accepted.
"""

from __future__ import annotations

import base64
import io
import json
import re
from dataclasses import dataclass, field, asdict

from PIL import Image

from ..errors import DecodeError, MalformedReply
from .client import ChatClient

BUILDS = ("slim", "average", "athletic", "muscular", "heavy")
HEIGHT_BANDS = ("short", "average", "tall", "very_tall")

MAX_IMAGE_SIDE = 768

_EXTRACTION_INSTRUCTIONS = f"""\
Extract the avatar attributes from the user's request. Reply with ONE JSON
object and nothing else. Schema (all fields optional, omit what is absent):
{{
  "sex": "male" | "female",
  "build": one of {list(BUILDS)},
  "height_cm": number,
  "height_qualitative": one of {list(HEIGHT_BANDS)},
  "age_years": number,
  "hair": {{"style": string, "color": string}},
  "facial_hair": string,
  "skin_tone": string,
  "clothing": [{{"slot": "outfit" | "footwear" | "hair", "descriptor": string, "color": string}}],
  "expression": string,
  "pose": string,
  "residual": string,
  "confidences": {{attribute name: number in [0, 1]}}
}}"""

_REPAIR_INSTRUCTION = (
    "The previous reply could not be parsed against the schema ({error}). "
    "Reply again with exactly one valid JSON object and no other text."
)


@dataclass
class ClothingItem:
    slot: str
    descriptor: str
    color: str | None = None


@dataclass
class AttributeSpec:
    sex: str | None = None
    build: str | None = None
    height_cm: float | None = None
    height_qualitative: str | None = None
    age_years: float | None = None
    hair: dict | None = None                   # {"style": ..., "color": ...}
    facial_hair: str | None = None
    skin_tone: str | None = None
    clothing: list[ClothingItem] = field(default_factory=list)
    expression: str | None = None
    pose: str | None = None
    residual: str = ""
    confidences: dict[str, float] = field(default_factory=dict)

    def present_attributes(self) -> list[str]:
        names = []
        for name in ("sex", "build", "height_cm", "height_qualitative", "age_years",
                     "hair", "facial_hair", "skin_tone", "expression", "pose"):
            if getattr(self, name) not in (None, "", {}):
                names.append(name)
        if self.clothing:
            names.append("clothing")
        return names

    def is_empty(self) -> bool:
        return not self.present_attributes() and not self.residual.strip()

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["clothing"] = [asdict(c) for c in self.clothing]
        return {k: v for k, v in doc.items() if v not in (None, "", [], {})}

    @classmethod
    def from_json(cls, doc: dict) -> "AttributeSpec":
        if not isinstance(doc, dict):
            raise ValueError("attribute document must be a JSON object")
        build = doc.get("build")
        if build is not None and build not in BUILDS:
            raise ValueError(f"build must be one of {BUILDS}, got {build!r}")
        band = doc.get("height_qualitative")
        if band is not None and band not in HEIGHT_BANDS:
            raise ValueError(f"height_qualitative must be one of {HEIGHT_BANDS}, got {band!r}")
        clothing = []
        for item in doc.get("clothing", []) or []:
            if not isinstance(item, dict) or "slot" not in item or "descriptor" not in item:
                raise ValueError(f"clothing items need slot and descriptor: {item!r}")
            clothing.append(ClothingItem(
                slot=str(item["slot"]),
                descriptor=str(item["descriptor"]),
                color=item.get("color"),
            ))
        confidences = {}
        for name, value in (doc.get("confidences") or {}).items():
            value = float(value)
            confidences[name] = min(max(value, 0.0), 1.0)
        spec = cls(
            sex=doc.get("sex"),
            build=build,
            height_cm=float(doc["height_cm"]) if doc.get("height_cm") is not None else None,
            height_qualitative=band,
            age_years=float(doc["age_years"]) if doc.get("age_years") is not None else None,
            hair=doc.get("hair"),
            facial_hair=doc.get("facial_hair"),
            skin_tone=doc.get("skin_tone"),
            clothing=clothing,
            expression=doc.get("expression"),
            pose=doc.get("pose"),
            residual=str(doc.get("residual", "") or ""),
            confidences=confidences,
        )
        if spec.is_empty():
            raise ValueError("empty attribute document: no attributes and no residual")
        return spec


_JSON_FENCE_RE = re.compile(r"```(?:json)?\s*(\{.*?\})\s*```", re.DOTALL)


def parse_attribute_reply(reply: str) -> AttributeSpec:
    m = _JSON_FENCE_RE.search(reply)
    blob = m.group(1) if m else _balanced_json(reply)
    if blob is None:
        raise ValueError("no JSON object in reply")
    return AttributeSpec.from_json(json.loads(blob))


def _balanced_json(text: str) -> str | None:
    start = text.find("{")
    if start < 0:
        return None
    depth = 0
    in_string = False
    escape = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start:i + 1]
    return None


def _extract(messages: list[dict], client: ChatClient, max_repairs: int = 2) -> AttributeSpec:
    attempt_messages = list(messages)
    last_error = "no reply"
    for _ in range(max_repairs + 1):
        reply = client.complete(attempt_messages)
        try:
            return parse_attribute_reply(reply)
        except (ValueError, json.JSONDecodeError) as exc:
            last_error = str(exc)
            attempt_messages = attempt_messages + [
                {"role": "assistant", "content": reply},
                {"role": "user", "content": _REPAIR_INSTRUCTION.format(error=last_error)},
            ]
    raise MalformedReply(f"attribute extraction failed after {max_repairs} repairs: {last_error}")


def extract_attributes_text(prompt: str, client: ChatClient) -> AttributeSpec:
    if not prompt.strip():
        raise ValueError("prompt must be non-empty")
    messages = [
        {"role": "system", "content": _EXTRACTION_INSTRUCTIONS},
        {"role": "user", "content": prompt},
    ]
    return _extract(messages, client)


def prepare_image(image_bytes: bytes, max_side: int = MAX_IMAGE_SIDE) -> bytes:
    """Decode, validate, and downscale to the cap; always re-encodes as PNG."""
    try:
        img = Image.open(io.BytesIO(image_bytes))
        img.load()
    except Exception as exc:
        raise DecodeError(f"cannot decode image: {exc}") from exc
    if max(img.size) > max_side:
        ratio = max_side / max(img.size)
        new_size = (max(1, round(img.size[0] * ratio)), max(1, round(img.size[1] * ratio)))
        img = img.resize(new_size, Image.LANCZOS)
    out = io.BytesIO()
    img.convert("RGB").save(out, format="PNG")
    return out.getvalue()


def extract_attributes_image(image_bytes: bytes, client: ChatClient,
                             hint: str = "") -> AttributeSpec:
    png = prepare_image(image_bytes)
    data_url = "data:image/png;base64," + base64.b64encode(png).decode()
    content = [
        {"type": "text",
         "text": "Describe the person in this image as avatar attributes." + (f" {hint}" if hint else "")},
        {"type": "image_url", "image_url": {"url": data_url}},
    ]
    messages = [
        {"role": "system", "content": _EXTRACTION_INSTRUCTIONS},
        {"role": "user", "content": content},
    ]
    return _extract(messages, client)
