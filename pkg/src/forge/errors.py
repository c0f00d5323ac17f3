"""Shared exception hierarchy.

Every error carries a stable machine-readable ``code`` so the HTTP layer can
surface a closed enum of error codes; message text is free-form and meant for
agents and humans alike.
"""

from __future__ import annotations


class ForgeError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"

    def __init__(self, message: str, **detail):
        super().__init__(message)
        self.detail = detail


# ---------------------------------------------------------------------------
# asset pack / registry

class PackError(ForgeError):
    code = "pack_error"


class MissingManifest(PackError):
    code = "missing_manifest"


class ManifestError(PackError):
    code = "manifest_error"


class DuplicateKey(PackError):
    code = "duplicate_key"

    def __init__(self, name: str):
        super().__init__(f"duplicate key definition: {name!r}", name=name)
        self.name = name


class DanglingDeltaRef(PackError):
    code = "dangling_delta_ref"

    def __init__(self, key_name: str, ref: str):
        super().__init__(
            f"key {key_name!r} references missing delta block {ref!r}",
            key=key_name, ref=ref,
        )
        self.key_name = key_name
        self.ref = ref


class UnknownMask(PackError):
    code = "unknown_mask"


class IoError(ForgeError):
    code = "io_error"


class PackIoError(PackError, IoError):
    code = "io_error"


# ---------------------------------------------------------------------------
# avatar state

class StateError(ForgeError):
    code = "state_error"


class UnknownKey(StateError):
    code = "unknown_key"

    def __init__(self, name: str, suggestions: list[str]):
        hint = ", ".join(suggestions) if suggestions else "(registry is empty)"
        super().__init__(
            f"unknown key {name!r}; nearest key names: {hint}",
            name=name, suggestions=suggestions,
        )
        self.name = name
        self.suggestions = suggestions


class UnknownSlot(StateError):
    code = "unknown_slot"


class UnknownAsset(StateError):
    code = "unknown_asset"


class SlotMismatch(StateError):
    code = "slot_mismatch"


class UnknownPreset(StateError):
    code = "unknown_preset"


class UnknownJoint(StateError):
    code = "unknown_joint"


class InvalidNumber(StateError):
    code = "invalid_number"


# ---------------------------------------------------------------------------
# geometry

class GeometryError(ForgeError):
    code = "geometry_error"


class EmptyMesh(GeometryError):
    code = "empty_mesh"


class DegenerateMesh(GeometryError):
    code = "degenerate_mesh"


# ---------------------------------------------------------------------------
# edit DSL

class EditSyntaxError(ForgeError):
    """Parse failure; span is (line, column), both 1-based."""

    code = "syntax_error"

    def __init__(self, message: str, span: tuple[int, int], hint: str = ""):
        text = f"line {span[0]}, col {span[1]}: {message}"
        if hint:
            text += f" ({hint})"
        super().__init__(text, span=span, hint=hint)
        self.span = span
        self.hint = hint


# ---------------------------------------------------------------------------
# model clients / agents

class ClientError(ForgeError):
    code = "client_error"


class ReplayMiss(ClientError):
    code = "replay_miss"


class MalformedReply(ForgeError):
    code = "malformed_reply"


class UnparseableCode(ForgeError):
    code = "unparseable_code"


class DecodeError(ForgeError):
    code = "decode_error"


class NoAvatarYet(ForgeError):
    code = "no_avatar_yet"


# ---------------------------------------------------------------------------
# manual store

class ManualLoadError(ForgeError):
    code = "manual_load_error"

    def __init__(self, message: str, line_number: int):
        super().__init__(f"{message} (line {line_number})", line_number=line_number)
        self.line_number = line_number


# ---------------------------------------------------------------------------
# motion

class ClipValidationError(ForgeError):
    code = "clip_validation_error"


class UnknownClip(ForgeError):
    code = "unknown_clip"


class UnparseableProgram(ForgeError):
    code = "unparseable_program"


class RangeOutOfClip(ForgeError):
    code = "range_out_of_clip"


# ---------------------------------------------------------------------------
# service

class SessionBusy(ForgeError):
    code = "session_busy"


class UnknownSession(ForgeError):
    code = "unknown_session"


class BadRequest(ForgeError):
    code = "bad_request"
