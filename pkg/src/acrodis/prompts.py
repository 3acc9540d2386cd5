"""Prompt routing and rendering.

Two templates: the standard-context template (A) carries optional few-shot
demonstrations and knowledge-base definitions; the strict disambiguation
template (B) enforces explicit selection rules for unseen acronyms whose
candidate options overlap heavily. Routing: seen acronym -> A with
few-shots; unseen with max pairwise option similarity >= tau -> B;
otherwise A zero-shot. Rendering is deterministic down to the byte.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass
from enum import Enum
from importlib import resources

from .dataset import AcronymPartition, LabeledExample, TestInstance
from .selection import EMPTY_FEWSHOT, FewShotSet
from .textsim import max_pairwise_option_similarity


def _template_block(name: str) -> str:
    text = (resources.files(__package__) / "templates" / name).read_text(
        encoding="utf-8")
    return text[:-1] if text.endswith("\n") else text


MAX_OPTIONS = 26

TEMPLATE_A = "A"
TEMPLATE_B = "B"


class RouteReason(str, Enum):
    SEEN = "seen"
    UNSEEN_AMBIGUOUS = "unseen_ambiguous"
    UNSEEN_PLAIN = "unseen_plain"


@dataclass(frozen=True)
class RoutingDecision:
    template: str
    fewshot: bool
    reason: RouteReason
    s_max: float | None = None


@dataclass(frozen=True)
class PromptBundle:
    text: str
    labels: tuple[str, ...]
    decision: RoutingDecision
    fewshot_ids: tuple[str, ...]
    kb_definitions: tuple[str, ...]
    instance_id: str
    options: tuple[str, ...]


def route(
    instance: TestInstance, partition: AcronymPartition, tau: float
) -> RoutingDecision:
    """Pick template and few-shot policy for one instance."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    if instance.acronym in partition.seen:
        return RoutingDecision(
            template=TEMPLATE_A, fewshot=True, reason=RouteReason.SEEN,
        )
    s_max = max_pairwise_option_similarity(list(instance.options))
    if s_max >= tau:
        return RoutingDecision(
            template=TEMPLATE_B, fewshot=False,
            reason=RouteReason.UNSEEN_AMBIGUOUS, s_max=s_max,
        )
    return RoutingDecision(
        template=TEMPLATE_A, fewshot=False,
        reason=RouteReason.UNSEEN_PLAIN, s_max=s_max,
    )


def option_labels(count: int) -> tuple[str, ...]:
    if count > MAX_OPTIONS:
        raise ValueError(
            f"{count} options exceed the {MAX_OPTIONS} available letter labels"
        )
    return tuple(string.ascii_uppercase[:count])


def _options_block(options: tuple[str, ...], labels: tuple[str, ...]) -> str:
    return "\n".join(f"{label}. {opt}" for label, opt in zip(labels, options))


def _definitions_block(definitions: tuple[str, ...]) -> str:
    lines = ["Valid definitions (for reference — ignore any that do not appear in Options):"]
    lines.extend(f"- {d}" for d in definitions)
    return "\n".join(lines)


def _fewshot_line(example: LabeledExample) -> str:
    record = {
        "text": example.context,
        "acronym": example.acronym,
        "options": {
            opt: (i in example.gold) for i, opt in enumerate(example.options)
        },
    }
    return json.dumps(record, ensure_ascii=False)


# static prompt text lives in versioned files under templates/
_A_PREAMBLE = _template_block("standard_preamble.txt")
_A_CLOSING = _template_block("standard_closing.txt")
_B_PREAMBLE = _template_block("strict_preamble.txt")
_B_TASK = _template_block("strict_task.txt")
_B_RULES = _template_block("strict_rules.txt")
_B_CLOSING = _template_block("strict_closing.txt")


def render_template_a(
    instance: TestInstance,
    fewshots: FewShotSet,
    definitions: list[str],
    decision: RoutingDecision,
) -> PromptBundle:
    """Standard-context prompt; the Examples and Valid-definitions sections
    are omitted when empty (zero-shot / no-KB paths)."""
    labels = option_labels(len(instance.options))
    sections = [
        _A_PREAMBLE,
        f"Read the following text carefully:\n{instance.context}",
        f'Determine what the acronym "{instance.acronym}" stands for '
        "**in this specific context**. Select zero or more options, but "
        "only if they precisely match the context—do not guess or "
        "over-select. If no option fits perfectly, select none.",
        "Choose from the options below (zero or more may be correct).\n"
        f"Options:\n{_options_block(instance.options, labels)}\n",
    ]
    if definitions:
        sections.append(_definitions_block(tuple(definitions)))
    if fewshots:
        shots = "\n\n".join(_fewshot_line(ex) for ex in fewshots.examples)
        sections.append(f"Examples (balanced & similar):\n{shots}")
    sections.append(_A_CLOSING)
    return PromptBundle(
        text="\n\n".join(sections),
        labels=labels,
        decision=decision,
        fewshot_ids=tuple(fewshots.ids()),
        kb_definitions=tuple(definitions),
        instance_id=instance.id,
        options=instance.options,
    )


def render_template_b(
    instance: TestInstance,
    definitions: list[str],
    decision: RoutingDecision,
) -> PromptBundle:
    """Strict disambiguation prompt: numbered selection rules, no few-shots."""
    labels = option_labels(len(instance.options))
    sections = [
        _B_PREAMBLE,
        _B_TASK,
        _B_RULES,
        f"Text:\n{instance.context}",
        f"Acronym: {instance.acronym}",
        f"Options:\n{_options_block(instance.options, labels)}\n",
    ]
    if definitions:
        sections.append(_definitions_block(tuple(definitions)))
    sections.append(_B_CLOSING)
    return PromptBundle(
        text="\n\n".join(sections),
        labels=labels,
        decision=decision,
        fewshot_ids=(),
        kb_definitions=tuple(definitions),
        instance_id=instance.id,
        options=instance.options,
    )


def render(
    instance: TestInstance,
    decision: RoutingDecision,
    fewshots: FewShotSet,
    definitions: list[str],
) -> PromptBundle:
    """Render whichever template the decision selected."""
    if decision.template == TEMPLATE_B:
        return render_template_b(instance, definitions, decision)
    shots = fewshots if decision.fewshot else EMPTY_FEWSHOT
    return render_template_a(instance, shots, definitions, decision)
