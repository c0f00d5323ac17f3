from .client import (
    ChatClient,
    ChatConfig,
    HttpChatClient,
    MockChatClient,
    RecordReplayClient,
    client_from_env,
    request_fingerprint,
)
from .attributes import (
    AttributeSpec,
    ClothingItem,
    extract_attributes_image,
    extract_attributes_text,
    prepare_image,
)
from .prompts import PromptBundle, build_prompt, state_digest
from .generator import GenerationResult, feedback_to_script, generate_script, split_sections
from .session import Session, SessionStore

__all__ = [
    "ChatClient", "ChatConfig", "HttpChatClient", "MockChatClient",
    "RecordReplayClient", "client_from_env", "request_fingerprint",
    "AttributeSpec", "ClothingItem", "extract_attributes_text",
    "extract_attributes_image", "prepare_image",
    "PromptBundle", "build_prompt", "state_digest",
    "GenerationResult", "generate_script", "feedback_to_script", "split_sections",
    "Session", "SessionStore",
]
