"""Branch naming, creation, and merge mechanics.

Round-1 inspection branches fork from master; round-2 branches fork from
the round-1 branch so the second inspection sees only the revision. Work
branches fork from the newest inspection branch. Merging into master
consults a gate (the workflow module's merge decision) before anything
moves.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

from . import diffs
from .errors import Conflict, MergeEmbargo, MissingBaseBranch, NothingToMerge
from .vcs import Snapshot, VcsModel
from .workflow import MergeDecision

SLUG_RE = re.compile(r"^[a-z0-9]+(?:-[a-z0-9]+)*$")
IDENT_RE = re.compile(r"^[a-z0-9][a-z0-9_-]*$")


@dataclass(frozen=True)
class BranchRole:
    """What a branch is for: the master line, an inspection branch for an
    artifact round, a member's work branch, or unknown."""

    kind: str  # "master" | "inspection" | "work" | "unknown"
    slug: str | None = None
    round: int | None = None
    owner: str | None = None
    task: str | None = None


MASTER_ROLE = BranchRole("master")
UNKNOWN_ROLE = BranchRole("unknown")


def inspection_role(slug: str, round_: int) -> BranchRole:
    return BranchRole("inspection", slug=slug, round=round_)


def work_role(owner: str, task: str) -> BranchRole:
    return BranchRole("work", owner=owner, task=task)


@dataclass(frozen=True)
class NamingPolicy:
    master_name: str = "master"
    inspection_prefix: str = "inspection/"
    round2_suffix: str = "/round-2"
    work_pattern: str = "<owner>/<task>"

    def inspection_name(self, slug: str, round_: int) -> str:
        if not SLUG_RE.match(slug):
            raise ValueError(f"bad artifact slug: {slug!r}")
        if round_ == 1:
            return f"{self.inspection_prefix}{slug}"
        if round_ == 2:
            return f"{self.inspection_prefix}{slug}{self.round2_suffix}"
        raise ValueError(f"round must be 1 or 2, got {round_}")

    def work_name(self, owner: str, task: str) -> str:
        if not IDENT_RE.match(owner) or not IDENT_RE.match(task):
            raise ValueError(f"bad work branch parts: {owner!r}/{task!r}")
        name = self.work_pattern.replace("<owner>", owner).replace("<task>", task)
        if name.startswith(self.inspection_prefix) or name == self.master_name:
            raise ValueError(f"work branch name collides with a reserved name: {name!r}")
        return name

    def render(self, role: BranchRole) -> str:
        if role.kind == "master":
            return self.master_name
        if role.kind == "inspection":
            return self.inspection_name(role.slug, role.round)
        if role.kind == "work":
            return self.work_name(role.owner, role.task)
        raise ValueError("unknown roles have no canonical name")


def classify_branch(policy: NamingPolicy, name: str) -> BranchRole:
    """Total classifier: anything the policy cannot explain is Unknown."""
    if name == policy.master_name:
        return MASTER_ROLE
    if name.startswith(policy.inspection_prefix):
        rest = name[len(policy.inspection_prefix):]
        round_ = 1
        if rest.endswith(policy.round2_suffix):
            rest = rest[: -len(policy.round2_suffix)]
            round_ = 2
        if SLUG_RE.match(rest):
            return inspection_role(rest, round_)
        return UNKNOWN_ROLE
    # work pattern with the default "<owner>/<task>" shape
    m = re.fullmatch(
        re.escape(policy.work_pattern)
        .replace(re.escape("<owner>"), r"(?P<owner>[a-z0-9][a-z0-9_-]*)")
        .replace(re.escape("<task>"), r"(?P<task>[a-z0-9][a-z0-9_-]*)"),
        name,
    )
    if m:
        return work_role(m.group("owner"), m.group("task"))
    return UNKNOWN_ROLE


def create_inspection_branch(
    vcs: VcsModel, slug: str, round_: int, policy: NamingPolicy | None = None,
) -> str:
    """Round 1 forks at master head; round 2 forks at the round-1 head."""
    policy = policy or NamingPolicy()
    name = policy.inspection_name(slug, round_)
    if round_ == 1:
        base = policy.master_name
    else:
        base = policy.inspection_name(slug, 1)
    if base not in vcs.branches:
        raise MissingBaseBranch(f"base branch '{base}' does not exist")
    vcs.create_branch(name, vcs.resolve(base))
    return name


def create_work_branch(
    vcs: VcsModel, owner: str, task: str, slug: str,
    policy: NamingPolicy | None = None, name: str | None = None,
) -> str:
    """Fork a member's work branch from the newest inspection branch of the
    artifact. An explicit ``name`` registers a bare branch name in place of
    the policy pattern."""
    policy = policy or NamingPolicy()
    base = None
    for round_ in (2, 1):
        candidate = policy.inspection_name(slug, round_)
        if candidate in vcs.branches:
            base = candidate
            break
    if base is None:
        raise MissingBaseBranch(f"no inspection branch for '{slug}' yet")
    branch = name if name is not None else policy.work_name(owner, task)
    vcs.create_branch(branch, vcs.resolve(base))
    return branch


GateFn = Callable[[], MergeDecision]


def merge_branch(
    vcs: VcsModel, source: str, target: str, gate: GateFn | None = None,
    policy: NamingPolicy | None = None, author: str = "system",
) -> str:
    """Merge source into target and return the resulting target head.

    Fast-forwards when the target head is already an ancestor of the
    source head; otherwise creates a two-parent merge commit. Merges into
    master consult the gate first. A file changed on both sides since the
    merge base fails the merge (no textual resolution is attempted).
    """
    policy = policy or NamingPolicy()
    src_head = vcs.resolve(source)
    tgt_head = vcs.resolve(target)

    if target == policy.master_name and gate is not None:
        decision = gate()
        if not decision.allow:
            raise MergeEmbargo(
                f"merge into {target} blocked: {decision.reason}"
            )

    if src_head == tgt_head or vcs.is_ancestor(src_head, tgt_head):
        raise NothingToMerge(f"'{source}' is already contained in '{target}'")

    if vcs.is_ancestor(tgt_head, src_head):
        vcs.set_branch(target, src_head)
        return src_head

    base = vcs.merge_base(src_head, tgt_head)
    merged = _merge_snapshots(
        vcs.snapshot_of(base), vcs.snapshot_of(tgt_head), vcs.snapshot_of(src_head),
    )
    return vcs.commit_snapshot(
        target, merged, f"Merge {source} into {target}", author,
        extra_parents=(src_head,),
    )


def _merge_snapshots(base: Snapshot, ours: Snapshot, theirs: Snapshot) -> Snapshot:
    conflicts = []
    merged: Snapshot = {}
    for path in sorted(set(base) | set(ours) | set(theirs)):
        b = base.get(path)
        o = ours.get(path)
        t = theirs.get(path)
        if o == t:
            result = o
        elif o == b:
            result = t
        elif t == b:
            result = o
        else:
            conflicts.append(path)
            continue
        if result is not None:
            merged[path] = result
    if conflicts:
        raise Conflict(
            "both sides changed: " + ", ".join(conflicts), paths=conflicts,
        )
    return merged
