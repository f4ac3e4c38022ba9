"""Inspection lifecycle state machine.

Each artifact moves through a fixed set of phases; staff inspections are
capped at two rounds. This module is pure: it never touches branches,
pull requests, or notifications, so every transition is unit-testable in
isolation. The full transition matrix is documented in
``docs/transition-table.md``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import IllegalTransition, RoundsExhausted

MAX_ROUNDS = 2


class ArtifactKind(str, Enum):
    REQUIREMENTS_SPEC = "requirements-spec"
    UI_DESIGN = "ui-design"
    CLASS_DIAGRAM = "class-diagram"
    DB_DESIGN = "db-design"
    SEQUENCE_DIAGRAM = "sequence-diagram"
    STATE_CHART = "state-chart"
    SOURCE_CODE = "source-code"


class ArtifactFormat(str, Enum):
    MARKDOWN = "markdown"
    PLANTUML = "plantuml"
    PLAIN_TEXT = "plain-text"


#: Default on-disk format per artifact kind: prose documents are markdown,
#: UML diagrams are PlantUML, code is plain text.
DEFAULT_FORMAT = {
    ArtifactKind.REQUIREMENTS_SPEC: ArtifactFormat.MARKDOWN,
    ArtifactKind.UI_DESIGN: ArtifactFormat.MARKDOWN,
    ArtifactKind.DB_DESIGN: ArtifactFormat.MARKDOWN,
    ArtifactKind.CLASS_DIAGRAM: ArtifactFormat.PLANTUML,
    ArtifactKind.SEQUENCE_DIAGRAM: ArtifactFormat.PLANTUML,
    ArtifactKind.STATE_CHART: ArtifactFormat.PLANTUML,
    ArtifactKind.SOURCE_CODE: ArtifactFormat.PLAIN_TEXT,
}


class PhaseKind(str, Enum):
    DRAFTING = "drafting"
    GROUP_REVIEW = "group-review"
    INSPECTION_REQUESTED = "inspection-requested"
    UNDER_INSPECTION = "under-inspection"
    REVISION_REQUESTED = "revision-requested"
    APPROVED = "approved"
    MERGED_TO_MASTER = "merged-to-master"


#: Phase kinds that carry an inspection round number.
ROUND_KINDS = frozenset({
    PhaseKind.INSPECTION_REQUESTED,
    PhaseKind.UNDER_INSPECTION,
    PhaseKind.REVISION_REQUESTED,
})


@dataclass(frozen=True)
class InspectionPhase:
    """One lifecycle phase; ``round`` is set only while an inspection round
    is in flight."""

    kind: PhaseKind
    round: int | None = None

    def __post_init__(self):
        if self.kind in ROUND_KINDS:
            if self.round not in (1, 2):
                raise ValueError(f"{self.kind.value} needs round 1 or 2, got {self.round}")
        elif self.round is not None:
            raise ValueError(f"{self.kind.value} carries no round")

    def label(self) -> str:
        if self.round is not None:
            return f"{self.kind.value}({self.round})"
        return self.kind.value


DRAFTING = InspectionPhase(PhaseKind.DRAFTING)
GROUP_REVIEW = InspectionPhase(PhaseKind.GROUP_REVIEW)
APPROVED = InspectionPhase(PhaseKind.APPROVED)
MERGED_TO_MASTER = InspectionPhase(PhaseKind.MERGED_TO_MASTER)


def inspection_requested(round_: int) -> InspectionPhase:
    return InspectionPhase(PhaseKind.INSPECTION_REQUESTED, round_)


def under_inspection(round_: int) -> InspectionPhase:
    return InspectionPhase(PhaseKind.UNDER_INSPECTION, round_)


def revision_requested(round_: int) -> InspectionPhase:
    return InspectionPhase(PhaseKind.REVISION_REQUESTED, round_)


def all_phases() -> list[InspectionPhase]:
    """Every concrete phase value (round-carrying kinds expanded)."""
    phases = []
    for kind in PhaseKind:
        if kind in ROUND_KINDS:
            phases.extend(InspectionPhase(kind, r) for r in (1, 2))
        else:
            phases.append(InspectionPhase(kind))
    return phases


class Verdict(str, Enum):
    APPROVE = "approve"
    REQUEST_CHANGES = "request-changes"


class EventKind(str, Enum):
    OPEN_GROUP_REVIEW_PR = "open-group-review-pr"
    GROUP_APPROVED = "group-approved"
    REQUEST_INSPECTION = "request-inspection"
    STAFF_REVIEW_SUBMITTED = "staff-review-submitted"
    INSPECTION_COMPLETED = "inspection-completed"
    REVISION_SUBMITTED = "revision-submitted"
    MERGE_TO_MASTER = "merge-to-master"


@dataclass(frozen=True)
class WorkflowEvent:
    """A lifecycle event; carries a verdict only for INSPECTION_COMPLETED."""

    kind: EventKind
    verdict: Verdict | None = None

    def __post_init__(self):
        if self.kind is EventKind.INSPECTION_COMPLETED:
            if self.verdict is None:
                raise ValueError("inspection-completed carries a verdict")
        elif self.verdict is not None:
            raise ValueError(f"{self.kind.value} carries no verdict")


OPEN_GROUP_REVIEW_PR = WorkflowEvent(EventKind.OPEN_GROUP_REVIEW_PR)
GROUP_APPROVED = WorkflowEvent(EventKind.GROUP_APPROVED)
REQUEST_INSPECTION = WorkflowEvent(EventKind.REQUEST_INSPECTION)
STAFF_REVIEW_SUBMITTED = WorkflowEvent(EventKind.STAFF_REVIEW_SUBMITTED)
REVISION_SUBMITTED = WorkflowEvent(EventKind.REVISION_SUBMITTED)
MERGE_TO_MASTER = WorkflowEvent(EventKind.MERGE_TO_MASTER)


def inspection_completed(verdict: Verdict) -> WorkflowEvent:
    return WorkflowEvent(EventKind.INSPECTION_COMPLETED, verdict)


def all_events() -> list[WorkflowEvent]:
    """Every concrete event value (completion verdicts expanded)."""
    events = []
    for kind in EventKind:
        if kind is EventKind.INSPECTION_COMPLETED:
            events.extend(WorkflowEvent(kind, v) for v in Verdict)
        else:
            events.append(WorkflowEvent(kind))
    return events


@dataclass(frozen=True)
class ArtifactRecord:
    """A registered artifact and where it stands in the inspection flow."""

    id: str
    name: str
    slug: str
    kind: ArtifactKind
    format: ArtifactFormat
    phase: InspectionPhase = DRAFTING
    rounds_used: int = 0
    group: str | None = None

    def __post_init__(self):
        if not 0 <= self.rounds_used <= MAX_ROUNDS:
            raise ValueError(f"rounds_used out of range: {self.rounds_used}")
        if self.phase.kind is PhaseKind.MERGED_TO_MASTER and self.rounds_used < 1:
            raise ValueError("cannot be merged without a completed inspection round")

    def with_phase(self, phase: InspectionPhase, rounds_used: int | None = None) -> "ArtifactRecord":
        return ArtifactRecord(
            id=self.id, name=self.name, slug=self.slug, kind=self.kind,
            format=self.format, phase=phase,
            rounds_used=self.rounds_used if rounds_used is None else rounds_used,
            group=self.group,
        )


@dataclass(frozen=True)
class MergeDecision:
    """Outcome of the master-merge gate."""

    allow: bool
    reason: str | None = None


#: Deny reason per blocking phase kind.
_DENY_REASONS = {
    PhaseKind.DRAFTING: "no-completed-inspection",
    PhaseKind.GROUP_REVIEW: "no-completed-inspection",
    PhaseKind.INSPECTION_REQUESTED: "inspection-open",
    PhaseKind.UNDER_INSPECTION: "inspection-open",
    PhaseKind.REVISION_REQUESTED: "revision-pending",
    PhaseKind.MERGED_TO_MASTER: "already-merged",
}


def advance(
    phase: InspectionPhase, rounds_used: int, event: WorkflowEvent,
) -> tuple[InspectionPhase, int]:
    """Apply one event to (phase, rounds_used) and return the successor.

    Raises IllegalTransition when the event is not valid in the phase, and
    RoundsExhausted when a third inspection is requested. Inputs are never
    mutated; equal inputs always yield equal outputs.
    """
    if not 0 <= rounds_used <= MAX_ROUNDS:
        raise ValueError(f"rounds_used out of range: {rounds_used}")
    kind, ev = phase.kind, event.kind

    if kind is PhaseKind.DRAFTING:
        if ev is EventKind.OPEN_GROUP_REVIEW_PR:
            return GROUP_REVIEW, rounds_used

    elif kind is PhaseKind.GROUP_REVIEW:
        if ev in (EventKind.OPEN_GROUP_REVIEW_PR, EventKind.GROUP_APPROVED):
            return GROUP_REVIEW, rounds_used
        if ev is EventKind.REQUEST_INSPECTION:
            return _next_round(rounds_used)

    elif kind is PhaseKind.INSPECTION_REQUESTED:
        if ev is EventKind.STAFF_REVIEW_SUBMITTED:
            return under_inspection(phase.round), rounds_used

    elif kind is PhaseKind.UNDER_INSPECTION:
        if ev is EventKind.STAFF_REVIEW_SUBMITTED:
            return phase, rounds_used
        if ev is EventKind.INSPECTION_COMPLETED:
            if event.verdict is Verdict.APPROVE:
                return APPROVED, rounds_used
            return revision_requested(phase.round), rounds_used

    elif kind is PhaseKind.REVISION_REQUESTED:
        if ev is EventKind.OPEN_GROUP_REVIEW_PR:
            # revision work re-enters group review before the next request
            return GROUP_REVIEW, rounds_used
        if ev is EventKind.REVISION_SUBMITTED:
            # modification commit inside the same round: staff re-check it
            return under_inspection(phase.round), rounds_used
        if ev is EventKind.REQUEST_INSPECTION:
            return _next_round(rounds_used)
        if ev is EventKind.INSPECTION_COMPLETED and event.verdict is Verdict.APPROVE:
            # instructor closes out after offline follow-up; sole exit once
            # both formal rounds are spent
            return APPROVED, rounds_used

    elif kind is PhaseKind.APPROVED:
        if ev is EventKind.MERGE_TO_MASTER:
            return MERGED_TO_MASTER, rounds_used

    # MERGED_TO_MASTER is absorbing: no event has a successor.
    raise IllegalTransition(
        f"event {event.kind.value} is not valid in phase {phase.label()}"
    )


def _next_round(rounds_used: int) -> tuple[InspectionPhase, int]:
    if rounds_used >= MAX_ROUNDS:
        raise RoundsExhausted(
            f"inspection already requested {MAX_ROUNDS} times"
        )
    return inspection_requested(rounds_used + 1), rounds_used + 1


def request_round(record: ArtifactRecord) -> int:
    """Round number the next inspection request would start, or RoundsExhausted."""
    if record.rounds_used >= MAX_ROUNDS:
        raise RoundsExhausted(
            f"artifact '{record.slug}' already used {MAX_ROUNDS} inspection rounds"
        )
    return record.rounds_used + 1


def can_merge_to_master(record: ArtifactRecord) -> MergeDecision:
    """Master-merge gate: allowed only once the inspection approved the artifact."""
    if record.phase.kind is PhaseKind.APPROVED:
        return MergeDecision(allow=True)
    return MergeDecision(allow=False, reason=_DENY_REASONS[record.phase.kind])
