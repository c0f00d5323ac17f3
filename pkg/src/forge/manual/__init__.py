from .store import Duplicate, ManualEntry, ManualStore, guidance_similarity

__all__ = ["ManualEntry", "ManualStore", "Duplicate", "guidance_similarity"]
