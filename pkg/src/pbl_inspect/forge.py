"""In-memory forge: pull requests, reviews, labels, notifications, milestones.

Gating rules enforced here mirror the course process: work-branch PRs need
a non-author approval from the group before merging, an inspection request
labels the PR and notifies every staff member, only the instructor
consolidates results, and nothing reaches master while an inspection is
open. Notification delivery is an append-only log; transports are out of
scope.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

from . import topology, workflow
from .anchors import AnchoredThread, open_thread, round_base_of
from .diffs import FileDiff, compute_diff
from .errors import (
    BranchMissing,
    DuplicatePullRequest,
    GroupReviewIncomplete,
    IllegalTransition,
    MilestoneExists,
    BadAttachment,
    NotInstructor,
    NotRequestedReviewer,
    NothingToReview,
    PullRequestClosed,
    StaffReviewsPending,
    UnansweredComments,
    UnknownMilestone,
    UnknownPr,
    UnknownThread,
    WrongPurpose,
)

if TYPE_CHECKING:
    from .project import ProjectState

INSPECTION_LABEL = "inspection"

GROUP_REVIEW = "group-review"
INSPECTION = "inspection"

OPEN = "open"
MERGED = "merged"
CLOSED = "closed"


class ReviewVerdict(str, Enum):
    APPROVE = "approve"
    REQUEST_CHANGES = "request-changes"
    COMMENT = "comment"


@dataclass
class Review:
    author: str
    verdict: ReviewVerdict
    timestamp: int  # monotonic event counter, not wall clock


@dataclass(frozen=True)
class Notification:
    recipient: str
    event: str
    subject_pr: str
    seq: int


@dataclass
class Milestone:
    title: str
    due: str  # ISO date
    items: dict[str, str] = field(default_factory=dict)  # id -> open|closed


@dataclass(frozen=True)
class PrPurpose:
    kind: str  # GROUP_REVIEW | INSPECTION
    round: int | None = None


@dataclass
class PullRequest:
    id: str
    author: str
    source: str
    target: str
    title: str
    purpose: PrPurpose
    body: str = ""
    labels: set[str] = field(default_factory=set)
    requested_reviewers: set[str] = field(default_factory=set)
    reviews: list[Review] = field(default_factory=list)
    comment_threads: list[AnchoredThread] = field(default_factory=list)
    state: str = OPEN
    merge_commit: str | None = None
    #: source head the comment threads are currently addressed against
    anchored_head: str = ""


@dataclass
class ForgeState:
    prs: dict[str, PullRequest] = field(default_factory=dict)
    notifications: list[Notification] = field(default_factory=list)
    milestones: dict[str, Milestone] = field(default_factory=dict)
    next_pr: int = 1

    def new_pr_id(self) -> str:
        pr_id = f"pr-{self.next_pr}"
        self.next_pr += 1
        return pr_id

    def get(self, pr_id: str) -> PullRequest:
        try:
            return self.prs[pr_id]
        except KeyError:
            raise UnknownPr(f"no pull request '{pr_id}'") from None

    def open_prs(self) -> list[PullRequest]:
        return [pr for pr in self.prs.values() if pr.state == OPEN]

    def to_dict(self) -> dict:
        return {
            "next_pr": self.next_pr,
            "prs": [_pr_to_dict(pr) for pr in self.prs.values()],
            "notifications": [
                {
                    "recipient": n.recipient,
                    "event": n.event,
                    "subject_pr": n.subject_pr,
                    "seq": n.seq,
                }
                for n in self.notifications
            ],
            "milestones": [
                {"title": m.title, "due": m.due, "items": dict(sorted(m.items.items()))}
                for m in sorted(self.milestones.values(), key=lambda m: m.title)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ForgeState":
        forge = cls(next_pr=data["next_pr"])
        for raw in data["prs"]:
            pr = _pr_from_dict(raw)
            forge.prs[pr.id] = pr
        forge.notifications = [
            Notification(n["recipient"], n["event"], n["subject_pr"], n["seq"])
            for n in data["notifications"]
        ]
        for raw in data["milestones"]:
            forge.milestones[raw["title"]] = Milestone(
                raw["title"], raw["due"], dict(raw["items"]),
            )
        return forge


def _pr_to_dict(pr: PullRequest) -> dict:
    from .anchors import thread_to_dict

    return {
        "id": pr.id,
        "author": pr.author,
        "source": pr.source,
        "target": pr.target,
        "title": pr.title,
        "body": pr.body,
        "purpose": {"kind": pr.purpose.kind, "round": pr.purpose.round},
        "labels": sorted(pr.labels),
        "requested_reviewers": sorted(pr.requested_reviewers),
        "reviews": [
            {"author": r.author, "verdict": r.verdict.value, "timestamp": r.timestamp}
            for r in pr.reviews
        ],
        "comment_threads": [thread_to_dict(t) for t in pr.comment_threads],
        "state": pr.state,
        "merge_commit": pr.merge_commit,
        "anchored_head": pr.anchored_head,
    }


def _pr_from_dict(raw: dict) -> PullRequest:
    from .anchors import thread_from_dict

    return PullRequest(
        id=raw["id"],
        author=raw["author"],
        source=raw["source"],
        target=raw["target"],
        title=raw["title"],
        body=raw["body"],
        purpose=PrPurpose(raw["purpose"]["kind"], raw["purpose"]["round"]),
        labels=set(raw["labels"]),
        requested_reviewers=set(raw["requested_reviewers"]),
        reviews=[
            Review(r["author"], ReviewVerdict(r["verdict"]), r["timestamp"])
            for r in raw["reviews"]
        ],
        comment_threads=[thread_from_dict(t) for t in raw["comment_threads"]],
        state=raw["state"],
        merge_commit=raw["merge_commit"],
        anchored_head=raw["anchored_head"],
    )


# --- pull request lifecycle ---------------------------------------------------


def open_group_review_pr(
    project: "ProjectState", work: str, inspection: str, title: str, author: str,
) -> PullRequest:
    """A member proposes merging their work branch into the inspection branch
    so the group can review it."""
    vcs = project.vcs
    src_head = vcs.resolve(work)
    tgt_head = vcs.resolve(inspection)
    tgt_role = project.classify(inspection)
    if tgt_role.kind != "inspection":
        raise WrongPurpose(
            f"'{inspection}' is not an inspection branch; group-review PRs "
            "target inspection branches only"
        )
    src_role = project.classify(work)
    if src_role.kind in ("master", "inspection"):
        raise WrongPurpose(f"'{work}' cannot be the work side of a group review")
    if vcs.is_ancestor(src_head, tgt_head):
        raise NothingToReview(
            f"'{work}' adds nothing on top of '{inspection}'"
        )
    for other in project.forge.open_prs():
        if other.source == work and other.target == inspection:
            raise DuplicatePullRequest(
                f"{other.id} already proposes '{work}' into '{inspection}'"
            )
    project.fire_event(tgt_role.slug, workflow.OPEN_GROUP_REVIEW_PR)
    pr = PullRequest(
        id=project.forge.new_pr_id(),
        author=author,
        source=work,
        target=inspection,
        title=title,
        purpose=PrPurpose(GROUP_REVIEW),
        anchored_head=src_head,
    )
    project.forge.prs[pr.id] = pr
    return pr


def group_review_complete(pr: PullRequest, roster: set[str]) -> bool:
    """True once a group member other than the PR author approved it."""
    if pr.purpose.kind != GROUP_REVIEW:
        raise WrongPurpose(f"{pr.id} is not a group-review pull request")
    return any(
        r.verdict is ReviewVerdict.APPROVE
        and r.author != pr.author
        and r.author in roster
        for r in pr.reviews
    )


def submit_review(
    project: "ProjectState", pr_id: str, author: str, verdict: ReviewVerdict,
) -> Review:
    pr = project.forge.get(pr_id)
    if pr.state != OPEN:
        raise PullRequestClosed(f"{pr.id} is {pr.state}; reviews need an open PR")
    project.role_of(author)  # must be registered
    slug = project.slug_of_pr(pr)
    if pr.purpose.kind == INSPECTION:
        if author not in project.staff_ids():
            raise NotRequestedReviewer(
                "inspection reviews come from the teaching staff"
            )
        project.fire_event(slug, workflow.STAFF_REVIEW_SUBMITTED)
        review = Review(author, verdict, project.next_seq())
        pr.reviews.append(review)
        return review
    # group review
    review = Review(author, verdict, project.next_seq())
    pr.reviews.append(review)
    roster = project.group_roster_for_slug(slug)
    if (
        verdict is ReviewVerdict.APPROVE
        and author != pr.author
        and author in roster
    ):
        project.fire_event(slug, workflow.GROUP_APPROVED)
    return review


def request_inspection(
    project: "ProjectState", slug: str, round_: int | None = None,
    actor: str | None = None,
) -> PullRequest:
    """Open the inspection PR, label it, assign the staff, notify them.

    Round 1 proposes the inspection branch into master; round 2 proposes
    the round-2 branch into the round-1 branch so only the revision shows.
    """
    record = project.artifact_by_slug(slug)
    expected = workflow.request_round(record)  # RoundsExhausted beyond two
    if round_ is None:
        round_ = expected
    elif round_ != expected:
        raise IllegalTransition(
            f"next inspection round for '{slug}' is {expected}, not {round_}"
        )

    if round_ == 1:
        source = project.naming.inspection_name(slug, 1)
        target = project.naming.master_name
    else:
        source = project.naming.inspection_name(slug, 2)
        target = project.naming.inspection_name(slug, 1)
    src_head = project.vcs.resolve(source)
    project.vcs.resolve(target)

    _check_group_reviews_merged(project, slug, source)
    if round_ == 2:
        _check_round1_threads_answered(project, slug)

    project.fire_event(slug, workflow.REQUEST_INSPECTION)

    # the previous round's PR is superseded; keeping two inspection PRs
    # open would split the discussion
    for other in project.forge.open_prs():
        if other.purpose.kind == INSPECTION and project.slug_of_pr(other) == slug:
            other.state = CLOSED

    staff = project.staff_ids()
    pr = PullRequest(
        id=project.forge.new_pr_id(),
        author=actor or "",
        source=source,
        target=target,
        title=f"Inspection round {round_}: {record.name}",
        purpose=PrPurpose(INSPECTION, round_),
        labels={INSPECTION_LABEL},
        requested_reviewers=set(staff),
        anchored_head=src_head,
    )
    project.forge.prs[pr.id] = pr
    for member in staff:
        project.forge.notifications.append(
            Notification(member, "inspection-requested", pr.id, project.next_seq())
        )
    return pr


def _check_group_reviews_merged(
    project: "ProjectState", slug: str, inspection_branch: str,
) -> None:
    roster = project.group_roster_for_slug(slug)
    for pr in project.forge.prs.values():
        if pr.purpose.kind != GROUP_REVIEW or pr.target != inspection_branch:
            continue
        if pr.state == OPEN:
            raise GroupReviewIncomplete(
                f"{pr.id} ('{pr.source}') is still open; merge it before requesting"
            )
        if pr.state == MERGED and not group_review_complete(pr, roster):
            raise GroupReviewIncomplete(
                f"{pr.id} ('{pr.source}') was merged without a non-author approval"
            )


def _check_round1_threads_answered(project: "ProjectState", slug: str) -> None:
    """Round 2 needs a group reply on every round-1 thread, outdated ones
    included; the resolved flag is advisory and excuses nothing."""
    roster = project.group_roster_for_slug(slug)
    for pr in project.forge.prs.values():
        if pr.purpose != PrPurpose(INSPECTION, 1) or project.slug_of_pr(pr) != slug:
            continue
        for idx, thread in enumerate(pr.comment_threads, start=1):
            replied = any(c.author in roster for c in thread.comments[1:])
            if not replied:
                raise UnansweredComments(
                    f"thread #{idx} on {pr.id} "
                    f"({thread.anchor.path}:{thread.anchor.line}) has no group reply"
                )


def complete_inspection(
    project: "ProjectState", slug: str, instructor: str, verdict: workflow.Verdict,
) -> list[Notification]:
    """The instructor consolidates the round once every staff reviewer has
    read the artifact, and the group is notified of the result."""
    if instructor != project.instructor_id():
        raise NotInstructor(f"'{instructor}' is not the instructor")
    record = project.artifact_by_slug(slug)
    pr = _current_inspection_pr(project, slug)
    reviewed = {r.author for r in pr.reviews}
    missing = [m for m in project.staff_ids() if m not in reviewed]
    if missing:
        raise StaffReviewsPending(
            "waiting for reviews from: " + ", ".join(missing)
        )
    project.fire_event(slug, workflow.inspection_completed(verdict))
    batch = []
    for member in sorted(project.group_roster_for_slug(slug)):
        note = Notification(
            member, f"inspection-{verdict.value}", pr.id, project.next_seq(),
        )
        project.forge.notifications.append(note)
        batch.append(note)
    return batch


def _current_inspection_pr(project: "ProjectState", slug: str) -> PullRequest:
    candidates = [
        pr
        for pr in project.forge.prs.values()
        if pr.purpose.kind == INSPECTION
        and pr.state == OPEN
        and project.slug_of_pr(pr) == slug
    ]
    if not candidates:
        raise UnknownPr(f"no open inspection pull request for '{slug}'")
    return candidates[-1]


def merge_pull_request(project: "ProjectState", pr_id: str, actor: str) -> str:
    """Merge a PR through the gates its purpose requires."""
    pr = project.forge.get(pr_id)
    if pr.state != OPEN:
        raise PullRequestClosed(f"{pr.id} is already {pr.state}")
    slug = project.slug_of_pr(pr)
    record = project.artifact_by_slug(slug)

    if pr.purpose.kind == GROUP_REVIEW:
        roster = project.group_roster_for_slug(slug)
        if not group_review_complete(pr, roster):
            raise GroupReviewIncomplete(
                f"{pr.id} needs an approval from a group member other than "
                f"'{pr.author}'"
            )
        project.fire_event(slug, workflow.GROUP_APPROVED)
        head = topology.merge_branch(
            project.vcs, pr.source, pr.target, policy=project.naming, author=actor,
        )
    elif pr.target == project.naming.master_name:
        head = topology.merge_branch(
            project.vcs, pr.source, pr.target,
            gate=lambda: workflow.can_merge_to_master(record),
            policy=project.naming, author=actor,
        )
        project.fire_event(slug, workflow.MERGE_TO_MASTER)
    else:
        # round-2 PR landing on the round-1 inspection branch
        head = topology.merge_branch(
            project.vcs, pr.source, pr.target, policy=project.naming, author=actor,
        )

    pr.state = MERGED
    pr.merge_commit = head
    project.remap_open_prs(pr.target)
    return head


def merge_to_master(project: "ProjectState", slug: str, actor: str) -> str:
    """Land an approved artifact on master, via its open inspection PR when
    one exists (round-1 approvals) or a direct branch merge (after round 2,
    whose PR targeted the round-1 branch)."""
    record = project.artifact_by_slug(slug)
    branch = project.naming.inspection_name(slug, 1)
    master = project.naming.master_name
    for pr in project.forge.open_prs():
        if (
            pr.purpose.kind == INSPECTION
            and pr.source == branch
            and pr.target == master
        ):
            return merge_pull_request(project, pr.id, actor)
    head = topology.merge_branch(
        project.vcs, branch, master,
        gate=lambda: workflow.can_merge_to_master(record),
        policy=project.naming, author=actor,
    )
    project.fire_event(slug, workflow.MERGE_TO_MASTER)
    project.remap_open_prs(master)
    return head


# --- diffs and anchored threads ------------------------------------------------


def pr_diff(project: "ProjectState", pr: PullRequest) -> list[FileDiff]:
    """Round-scoped diff: base is the merge base of target and source, so a
    round-2 PR shows only changes made after round 1 ended."""
    base = round_base_of(pr, project.vcs)
    old = project.vcs.snapshot_of(base)
    new = project.vcs.snapshot_of(project.vcs.resolve(pr.source))
    return compute_diff(old, new)


def add_comment(
    project: "ProjectState", pr_id: str, path: str, side: str, line: int,
    author: str, body: str,
) -> AnchoredThread:
    pr = project.forge.get(pr_id)
    if pr.state != OPEN:
        raise PullRequestClosed(
            f"{pr.id} is {pr.state}; new line comments need an open PR"
        )
    project.role_of(author)
    thread = open_thread(pr_diff(project, pr), path, side, line, author, body)
    pr.comment_threads.append(thread)
    return thread


def reply_to_thread(
    project: "ProjectState", pr_id: str, thread_no: int, author: str, body: str,
    resolve: bool = False,
) -> AnchoredThread:
    """Append to an existing thread; allowed on closed PRs so follow-up
    discussion survives a superseded round."""
    pr = project.forge.get(pr_id)
    project.role_of(author)
    if not 1 <= thread_no <= len(pr.comment_threads):
        raise UnknownThread(f"{pr.id} has no thread #{thread_no}")
    thread = pr.comment_threads[thread_no - 1]
    thread.reply(author, body)
    if resolve:
        thread.resolved = True
    return thread


# --- milestones -----------------------------------------------------------------


def add_milestone(project: "ProjectState", title: str, due: str) -> Milestone:
    if title in project.forge.milestones:
        raise MilestoneExists(f"milestone '{title}' already exists")
    milestone = Milestone(title=title, due=due)
    project.forge.milestones[title] = milestone
    return milestone


def get_milestone(project: "ProjectState", title: str) -> Milestone:
    try:
        return project.forge.milestones[title]
    except KeyError:
        raise UnknownMilestone(f"no milestone '{title}'") from None


def attach_to_milestone(project: "ProjectState", title: str, item_id: str) -> None:
    milestone = get_milestone(project, title)
    if item_id not in project.forge.prs and not item_id.startswith("issue-"):
        raise BadAttachment(f"'{item_id}' is neither a PR id nor an issue reference")
    milestone.items.setdefault(item_id, "open")


def close_milestone_item(project: "ProjectState", title: str, item_id: str) -> None:
    milestone = get_milestone(project, title)
    if item_id not in milestone.items:
        raise BadAttachment(f"'{item_id}' is not attached to '{title}'")
    milestone.items[item_id] = "closed"


def milestone_progress(milestone: Milestone) -> float:
    """Closed share of attached items; an empty milestone reports 0."""
    if not milestone.items:
        return 0.0
    closed = sum(1 for state in milestone.items.values() if state == "closed")
    return closed / len(milestone.items)
