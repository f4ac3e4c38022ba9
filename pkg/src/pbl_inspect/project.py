"""Durable project state: members, groups, artifacts, repo, forge, log.

The whole project lives in one human-readable JSON file under
``.pbl-inspect/`` plus an append-only event log, both documented
field-by-field in ``docs/file-formats.md``. Writes go through a
write-temp-then-rename so a crash mid-command never corrupts the file;
one advisory lock per project keeps concurrent invocations out.
"""

from __future__ import annotations

import fcntl
import json
import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import workflow
from .anchors import remap_anchors
from .commitlint import LintPolicy
from .diffs import compute_diff
from .errors import (
    DuplicateSlug,
    LockHeld,
    ProjectExists,
    ProjectMissing,
    StateCorrupt,
    UnknownActor,
    UnknownArtifact,
    WrongPurpose,
)
from .forge import ForgeState, INSPECTION, PullRequest
from .topology import BranchRole, NamingPolicy, classify_branch, work_role
from .vcs import VcsModel
from .workflow import ArtifactFormat, ArtifactKind, ArtifactRecord, InspectionPhase, PhaseKind

SCHEMA_VERSION = 1
STATE_DIR = ".pbl-inspect"
STATE_FILE = "project.json"
EVENTS_FILE = "events.jsonl"
LOCK_FILE = "lock"

ROLE_STUDENT = "student"
ROLE_TA = "ta"
ROLE_INSTRUCTOR = "instructor"
ROLES = (ROLE_STUDENT, ROLE_TA, ROLE_INSTRUCTOR)


@dataclass
class Member:
    id: str
    role: str


@dataclass
class ProjectState:
    project_name: str
    members: list[Member] = field(default_factory=list)
    groups: dict[str, list[str]] = field(default_factory=dict)
    artifacts: list[ArtifactRecord] = field(default_factory=list)
    naming: NamingPolicy = field(default_factory=NamingPolicy)
    vcs: VcsModel = field(default_factory=VcsModel)
    forge: ForgeState = field(default_factory=ForgeState)
    #: explicitly registered branch roles (bare work-branch names)
    branch_roles: dict[str, BranchRole] = field(default_factory=dict)
    lint: LintPolicy = field(default_factory=LintPolicy)
    next_event_seq: int = 1
    next_artifact: int = 1

    # --- membership -------------------------------------------------------

    def validate(self) -> None:
        instructors = [m.id for m in self.members if m.role == ROLE_INSTRUCTOR]
        if len(instructors) != 1:
            raise StateCorrupt(
                f"a project has exactly one instructor, found {len(instructors)}"
            )
        students = {m.id for m in self.members if m.role == ROLE_STUDENT}
        seen: set[str] = set()
        for gid, ids in self.groups.items():
            for member in ids:
                if member not in students:
                    raise StateCorrupt(f"group '{gid}' lists non-student '{member}'")
                if member in seen:
                    raise StateCorrupt(f"'{member}' belongs to more than one group")
                seen.add(member)
        ungrouped = students - seen
        if ungrouped:
            raise StateCorrupt(
                "students outside any group: " + ", ".join(sorted(ungrouped))
            )
        slugs = [a.slug for a in self.artifacts]
        if len(slugs) != len(set(slugs)):
            raise StateCorrupt("artifact slugs must be unique")

    def role_of(self, actor: str) -> str:
        for member in self.members:
            if member.id == actor:
                return member.role
        raise UnknownActor(f"'{actor}' is not a registered member")

    def instructor_id(self) -> str:
        return next(m.id for m in self.members if m.role == ROLE_INSTRUCTOR)

    def staff_ids(self) -> list[str]:
        """Instructor first, then TAs in id order."""
        tas = sorted(m.id for m in self.members if m.role == ROLE_TA)
        return [self.instructor_id(), *tas]

    def student_ids(self) -> list[str]:
        return sorted(m.id for m in self.members if m.role == ROLE_STUDENT)

    def group_of_member(self, member_id: str) -> str | None:
        for gid, ids in self.groups.items():
            if member_id in ids:
                return gid
        return None

    # --- artifacts ----------------------------------------------------------

    def add_artifact(
        self, slug: str, name: str, kind: ArtifactKind,
        format_: ArtifactFormat | None = None, group: str | None = None,
    ) -> ArtifactRecord:
        if any(a.slug == slug for a in self.artifacts):
            raise DuplicateSlug(f"artifact slug '{slug}' already registered")
        if group is None and len(self.groups) == 1:
            group = next(iter(self.groups))
        record = ArtifactRecord(
            id=f"art-{self.next_artifact}",
            name=name,
            slug=slug,
            kind=kind,
            format=format_ or workflow.DEFAULT_FORMAT[kind],
            group=group,
        )
        self.next_artifact += 1
        self.artifacts.append(record)
        return record

    def artifact_by_slug(self, slug: str) -> ArtifactRecord:
        for record in self.artifacts:
            if record.slug == slug:
                return record
        raise UnknownArtifact(f"no artifact with slug '{slug}'")

    def replace_artifact(self, record: ArtifactRecord) -> None:
        for i, existing in enumerate(self.artifacts):
            if existing.slug == record.slug:
                self.artifacts[i] = record
                return
        raise UnknownArtifact(f"no artifact with slug '{record.slug}'")

    def fire_event(self, slug: str, event: workflow.WorkflowEvent) -> ArtifactRecord:
        record = self.artifact_by_slug(slug)
        phase, rounds = workflow.advance(record.phase, record.rounds_used, event)
        updated = record.with_phase(phase, rounds)
        self.replace_artifact(updated)
        return updated

    def group_roster_for_slug(self, slug: str) -> set[str]:
        record = self.artifact_by_slug(slug)
        if record.group is not None:
            return set(self.groups.get(record.group, []))
        return set(self.student_ids())

    # --- branches and PRs ------------------------------------------------------

    def classify(self, name: str) -> BranchRole:
        if name in self.branch_roles:
            return self.branch_roles[name]
        return classify_branch(self.naming, name)

    def register_work_branch(self, name: str, owner: str, task: str) -> None:
        self.branch_roles[name] = work_role(owner, task)

    def slug_of_pr(self, pr: PullRequest) -> str:
        """The artifact a PR belongs to, from its branch roles."""
        if pr.purpose.kind == INSPECTION:
            role = self.classify(pr.source)
        else:
            role = self.classify(pr.target)
        if role.kind != "inspection" or role.slug is None:
            raise WrongPurpose(
                f"{pr.id} is not attached to an inspection branch"
            )
        return role.slug

    def next_seq(self) -> int:
        seq = self.next_event_seq
        self.next_event_seq += 1
        return seq

    def remap_open_prs(self, branch: str) -> None:
        """After a branch head moves, re-address threads of open PRs whose
        source is that branch."""
        head = self.vcs.resolve(branch)
        for pr in self.forge.open_prs():
            if pr.source != branch or pr.anchored_head == head:
                continue
            incremental = compute_diff(
                self.vcs.snapshot_of(pr.anchored_head), self.vcs.snapshot_of(head),
            )
            pr.comment_threads = remap_anchors(pr.comment_threads, incremental)
            pr.anchored_head = head

    def apply_commit(
        self, branch: str, changes: dict[str, list[str] | None],
        message: str, author: str,
    ) -> str:
        """Commit edits to a branch; a modification commit on the source of
        an open inspection PR during revision puts the round back under
        inspection, and anchored threads are re-addressed."""
        snapshot = self.vcs.head_snapshot(branch)
        for path, lines in changes.items():
            if lines is None:
                snapshot.pop(path, None)
            else:
                snapshot[path] = list(lines)
        cid = self.vcs.commit_snapshot(branch, snapshot, message, author)
        for pr in self.forge.open_prs():
            if pr.source != branch or pr.purpose.kind != INSPECTION:
                continue
            record = self.artifact_by_slug(self.slug_of_pr(pr))
            if record.phase.kind is PhaseKind.REVISION_REQUESTED:
                self.fire_event(record.slug, workflow.REVISION_SUBMITTED)
        self.remap_open_prs(branch)
        return cid

    # --- serialization -----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "project_name": self.project_name,
            "members": [{"id": m.id, "role": m.role} for m in self.members],
            "groups": {gid: list(ids) for gid, ids in sorted(self.groups.items())},
            "artifacts": [_artifact_to_dict(a) for a in self.artifacts],
            "naming": {
                "master_name": self.naming.master_name,
                "inspection_prefix": self.naming.inspection_prefix,
                "round2_suffix": self.naming.round2_suffix,
                "work_pattern": self.naming.work_pattern,
            },
            "branch_roles": {
                name: _role_to_dict(role)
                for name, role in sorted(self.branch_roles.items())
            },
            "lint": {
                "min_subject_chars": self.lint.min_subject_chars,
                "max_subject_chars": self.lint.max_subject_chars,
                "vague_subjects": list(self.lint.vague_subjects),
                "body_file_threshold": self.lint.body_file_threshold,
            },
            "next_event_seq": self.next_event_seq,
            "next_artifact": self.next_artifact,
            "vcs": self.vcs.to_dict(),
            "forge": self.forge.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProjectState":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise StateCorrupt(
                f"unsupported schema_version {data.get('schema_version')!r}"
            )
        naming = NamingPolicy(**data["naming"])
        state = cls(
            project_name=data["project_name"],
            members=[Member(m["id"], m["role"]) for m in data["members"]],
            groups={gid: list(ids) for gid, ids in data["groups"].items()},
            artifacts=[_artifact_from_dict(a) for a in data["artifacts"]],
            naming=naming,
            vcs=VcsModel.from_dict(data["vcs"]),
            forge=ForgeState.from_dict(data["forge"]),
            branch_roles={
                name: _role_from_dict(raw)
                for name, raw in data["branch_roles"].items()
            },
            lint=LintPolicy(
                min_subject_chars=data["lint"]["min_subject_chars"],
                max_subject_chars=data["lint"]["max_subject_chars"],
                vague_subjects=tuple(data["lint"]["vague_subjects"]),
                body_file_threshold=data["lint"]["body_file_threshold"],
            ),
            next_event_seq=data["next_event_seq"],
            next_artifact=data["next_artifact"],
        )
        return state


def _artifact_to_dict(a: ArtifactRecord) -> dict:
    return {
        "id": a.id,
        "name": a.name,
        "slug": a.slug,
        "kind": a.kind.value,
        "format": a.format.value,
        "phase": {"kind": a.phase.kind.value, "round": a.phase.round},
        "rounds_used": a.rounds_used,
        "group": a.group,
    }


def _artifact_from_dict(raw: dict) -> ArtifactRecord:
    return ArtifactRecord(
        id=raw["id"],
        name=raw["name"],
        slug=raw["slug"],
        kind=ArtifactKind(raw["kind"]),
        format=ArtifactFormat(raw["format"]),
        phase=InspectionPhase(PhaseKind(raw["phase"]["kind"]), raw["phase"]["round"]),
        rounds_used=raw["rounds_used"],
        group=raw["group"],
    )


def _role_to_dict(role: BranchRole) -> dict:
    return {
        "kind": role.kind,
        "slug": role.slug,
        "round": role.round,
        "owner": role.owner,
        "task": role.task,
    }


def _role_from_dict(raw: dict) -> BranchRole:
    return BranchRole(
        kind=raw["kind"], slug=raw["slug"], round=raw["round"],
        owner=raw["owner"], task=raw["task"],
    )


# --- on-disk layout ----------------------------------------------------------------


def state_dir(root: Path) -> Path:
    return Path(root) / STATE_DIR


def state_path(root: Path) -> Path:
    return state_dir(root) / STATE_FILE


def events_path(root: Path) -> Path:
    return state_dir(root) / EVENTS_FILE


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def save_project(state: ProjectState, root: Path) -> None:
    state.validate()
    directory = state_dir(root)
    directory.mkdir(parents=True, exist_ok=True)
    _atomic_write(state_path(root), json.dumps(state.to_dict(), indent=2) + "\n")


def load_project(root: Path) -> ProjectState:
    path = state_path(root)
    if not path.exists():
        raise ProjectMissing(f"no project at {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise StateCorrupt(f"cannot read {path}: {exc}") from exc
    return ProjectState.from_dict(data)


def init_project(state: ProjectState, root: Path) -> None:
    if state_path(root).exists():
        raise ProjectExists(f"project already initialized at {state_dir(root)}")
    save_project(state, root)


# --- event log -------------------------------------------------------------------


@dataclass(frozen=True)
class EventLogEntry:
    seq: int
    actor: str
    command: str
    outcome: str  # "ok" or an error code
    timestamp: str


def read_events(root: Path) -> list[EventLogEntry]:
    path = events_path(root)
    if not path.exists():
        return []
    entries = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        entries.append(
            EventLogEntry(
                raw["seq"], raw["actor"], raw["command"], raw["outcome"],
                raw["timestamp"],
            )
        )
    return entries


def append_event(root: Path, actor: str, command: str, outcome: str) -> EventLogEntry:
    """Append one audit entry; ordering authority is the seq counter, the
    wall-clock timestamp is for humans only."""
    events = read_events(root)
    seq = events[-1].seq + 1 if events else 1
    entry = EventLogEntry(
        seq=seq,
        actor=actor,
        command=command,
        outcome=outcome,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    path = events_path(root)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as handle:
        handle.write(json.dumps(entry.__dict__) + "\n")
    return entry


# --- advisory lock --------------------------------------------------------------------


@contextmanager
def project_lock(root: Path):
    """One mutating process per project; a held lock fails fast instead of
    blocking (flock drops with the process, so crashes cannot wedge it)."""
    directory = state_dir(root)
    directory.mkdir(parents=True, exist_ok=True)
    handle = (directory / LOCK_FILE).open("w")
    try:
        try:
            fcntl.flock(handle.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        except BlockingIOError:
            raise LockHeld(f"project at {root} is locked by another process") from None
        yield
    finally:
        try:
            fcntl.flock(handle.fileno(), fcntl.LOCK_UN)
        finally:
            handle.close()
