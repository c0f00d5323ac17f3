"""The agent-critic refinement loop.

Per round: retrieve manual guidance, build the prompt (with the previous
round's feedback), generate a script, apply it transactionally, evaluate and
render, critique, and on failure feed a guidance candidate into the manual.
Apply errors consume a round so a stuck agent cannot loop forever; the loop
returns the best round by aggregate score unless configured otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..agents.attributes import AttributeSpec
from ..agents.client import ChatClient
from ..agents.generator import generate_script
from ..agents.prompts import build_prompt
from ..agents.session import Session, SessionStore
from ..core.evaluate import evaluate
from ..core.pack import Pack
from ..core.state import AvatarState, new_avatar, state_hash
from ..dsl import apply_script
from ..dsl.printer import print_script
from ..errors import ClientError, UnparseableCode
from ..manual.store import Duplicate, ManualStore
from .critic import Criterion, CritiqueReport, merge_reports, rule_critique, vlm_critique


@dataclass
class LoopConfig:
    max_rounds: int = 5
    rule_threshold: float = 1.0
    vlm_threshold: float = 0.8
    critic_mode: str = "rule"          # rule | vlm | both
    keep_best: bool = True
    learn_enabled: bool = True         # False = static (seed-only) manual
    budget_tokens: int = 6000
    retrieve_k: int = 6

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        for t in (self.rule_threshold, self.vlm_threshold):
            if not 0.0 < t <= 1.0:
                raise ValueError("thresholds must be in (0, 1]")
        if self.critic_mode not in ("rule", "vlm", "both"):
            raise ValueError(f"bad critic_mode {self.critic_mode!r}")

    @property
    def active_threshold(self) -> float:
        return self.rule_threshold if self.critic_mode == "rule" else self.vlm_threshold


@dataclass
class RefineDeps:
    pack: Pack
    chat: ChatClient
    manual: ManualStore
    vlm: ChatClient | None = None
    session_store: SessionStore | None = None
    render_fn: object = None           # callable(mesh) -> list[(view, png bytes)]
    prompt_text: str = ""              # original user wording, for the VLM critic


_TAG_SOURCES = [
    ("sex", ("body", "build")),
    ("build", ("body", "build")),
    ("height_cm", ("height",)),
    ("height_qualitative", ("height",)),
    ("age_years", ("age",)),
    ("facial_hair", ("face", "hair")),
    ("hair", ("hair",)),
    ("skin_tone", ("face",)),
    ("expression", ("face",)),
    ("pose", ("pose",)),
]


def spec_tags(spec: AttributeSpec) -> list[str]:
    tags: list[str] = []

    def add(*values: str) -> None:
        for v in values:
            if v not in tags:
                tags.append(v)

    for attr, mapped in _TAG_SOURCES:
        if getattr(spec, attr, None):
            add(*mapped)
    for item in spec.clothing:
        add("clothing", item.slot)
    if not tags:
        add("dsl")
    return tags


def _failure_report(round_no: int, kind: str, message: str) -> CritiqueReport:
    report = CritiqueReport(round=round_no)
    report.criteria = [Criterion(kind, False, 0.0, message)]
    report.finalize(threshold=1.0)
    report.feedback_text = (
        f"Verification failed (aggregate 0.00):\n- FAIL {kind}: {message}\n"
        f"Fix the failed criteria ({kind}) and keep the passing values."
    )
    report.manual_candidate = (
        ("dsl", "apply"),
        message,
        "Emit only statements from the edit-language grammar, using registry "
        "key, slot, asset, and preset names exactly as listed in the generator reference.",
    )
    return report


def refine_loop(
    spec: AttributeSpec,
    session: Session,
    config: LoopConfig,
    deps: RefineDeps,
) -> tuple[AvatarState, list[dict]]:
    """Run the loop; returns (final state, per-round records)."""
    registry = deps.pack.registry
    state = session.current_state or new_avatar(registry, seed=session.seed)
    records: list[dict] = []
    prior_report: CritiqueReport | None = None
    best: tuple[float, int, AvatarState, CritiqueReport] | None = None

    tags = spec_tags(spec)
    query = " ".join([spec.residual or "", deps.prompt_text or ""]).strip()

    for round_no in range(1, config.max_rounds + 1):
        hits = deps.manual.retrieve(tags, query_text=query, k=config.retrieve_k)
        bundle = build_prompt(
            spec, state, registry, hits, prior_report, budget_tokens=config.budget_tokens
        )
        kept_hits = hits[: len(hits) - bundle.dropped_manual]
        for entry in kept_hits:
            deps.manual.touch(entry.id)

        record: dict = {"round": round_no, "manual_used": [e.id for e in kept_hits]}
        report: CritiqueReport

        try:
            result = generate_script(bundle, deps.chat)
        except UnparseableCode as exc:
            report = _failure_report(round_no, "apply", str(exc))
            record.update(script="", cot={}, apply={"applied": 0, "errors": [str(exc)]})
        else:
            record["script"] = print_script(result.script)
            record["cot"] = result.cot
            record["repair_count"] = result.repair_count
            new_state, apply_report = apply_script(result.script, state, registry, deps.pack)
            record["apply"] = {
                "applied": apply_report.applied,
                "warnings": apply_report.warnings,
                "errors": [f"line {s[0]}, col {s[1]}: {m}" for s, m in apply_report.errors],
            }
            if not apply_report.ok:
                report = _failure_report(round_no, "apply", apply_report.summary())
            else:
                state = new_state
                session.current_state = state
                mesh, _skeleton = evaluate(state, deps.pack)
                renders: list[tuple[str, bytes]] = []
                if deps.render_fn is not None:
                    renders = deps.render_fn(mesh)
                    if deps.session_store is not None:
                        record["renders"] = [
                            deps.session_store.write_render(session.id, round_no, view, png)
                            for view, png in renders
                        ]
                report = _critique(
                    config, state, spec, registry, mesh, renders, deps, round_no
                )

        record["report"] = report.to_json()
        record["state_hash"] = state_hash(state)

        aggregate = report.aggregate if report.criteria else 1.0
        if best is None or aggregate > best[0]:
            best = (aggregate, round_no, state, report)
        record["best_aggregate_so_far"] = best[0]
        records.append(record)
        session.add_round(record)
        if deps.session_store is not None:
            deps.session_store.save(session)

        if report.passed:
            break
        if config.learn_enabled and report.manual_candidate is not None:
            cand_tags, failure, guidance = report.manual_candidate
            if guidance.strip():
                outcome = deps.manual.learn(cand_tags, failure, guidance)
                record["manual_learned"] = (
                    outcome.existing_id if isinstance(outcome, Duplicate) else outcome
                )
        prior_report = report

    final = best[2] if (config.keep_best and best is not None) else state
    session.current_state = final
    if deps.session_store is not None:
        deps.session_store.save(session)
    return final, records


def _critique(config, state, spec, registry, mesh, renders, deps, round_no) -> CritiqueReport:
    rule_rep = None
    vlm_rep = None
    if config.critic_mode in ("rule", "both"):
        rule_rep = rule_critique(state, spec, registry, mesh,
                                 threshold=config.rule_threshold, round_no=round_no)
    if config.critic_mode in ("vlm", "both"):
        if deps.vlm is None:
            raise ClientError("critic_mode includes vlm but no VLM client is configured")
        pngs = [png for _view, png in renders]
        vlm_rep = vlm_critique(pngs, deps.prompt_text or spec.residual or "",
                               deps.vlm, threshold=config.vlm_threshold, round_no=round_no)
    if config.critic_mode == "rule":
        return rule_rep
    if config.critic_mode == "vlm":
        return vlm_rep
    return merge_reports(rule_rep, vlm_rep, config.vlm_threshold, round_no)
