from .critic import Criterion, CritiqueReport, rule_critique, vlm_critique
from .loop import LoopConfig, RefineDeps, refine_loop, spec_tags

__all__ = [
    "Criterion", "CritiqueReport", "rule_critique", "vlm_critique",
    "LoopConfig", "RefineDeps", "refine_loop", "spec_tags",
]
