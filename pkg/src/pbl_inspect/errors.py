"""Error hierarchy shared by all modules.

Every error carries a stable ``code`` (used in the event log and JSON
output) and belongs to a family that maps to a distinct CLI exit status.
"""

from __future__ import annotations


class PblError(Exception):
    """Base class for all domain errors."""

    code = "Error"
    exit_status = 1
    hint = ""

    def __init__(self, message: str, hint: str | None = None):
        super().__init__(message)
        if hint is not None:
            self.hint = hint


# --- workflow family (exit 4) ------------------------------------------------

class WorkflowError(PblError):
    exit_status = 4


class IllegalTransition(WorkflowError):
    code = "IllegalTransition"
    hint = "run 'status' to see the artifact's current phase"


class RoundsExhausted(WorkflowError):
    code = "RoundsExhausted"
    hint = "an artifact can be inspected twice at most"


# --- repository topology family (exit 5) -------------------------------------

class TopologyError(PblError):
    exit_status = 5


class BranchExists(TopologyError):
    code = "BranchExists"


class BranchMissing(TopologyError):
    code = "BranchMissing"


class MissingBaseBranch(TopologyError):
    code = "MissingBaseBranch"
    hint = "create the base branch first"


class NothingToMerge(TopologyError):
    code = "NothingToMerge"


class Conflict(TopologyError):
    code = "Conflict"
    hint = "both branches changed the same file; rework one side"

    def __init__(self, message: str, paths: list[str] | None = None):
        super().__init__(message)
        self.paths = list(paths or [])


class NoCommonAncestor(TopologyError):
    code = "NoCommonAncestor"


class UnknownCommit(TopologyError):
    code = "UnknownCommit"


# --- review gating family (exit 6) --------------------------------------------

class GatingError(PblError):
    exit_status = 6


class MergeEmbargo(GatingError):
    code = "MergeEmbargo"
    hint = "master is frozen for this artifact until its inspection is finished"


class GroupReviewIncomplete(GatingError):
    code = "GroupReviewIncomplete"
    hint = "every work-branch PR needs a non-author approval and a merge first"


class UnansweredComments(GatingError):
    code = "UnansweredComments"
    hint = "reply to every first-round comment thread before requesting again"


class StaffReviewsPending(GatingError):
    code = "StaffReviewsPending"
    hint = "all requested staff reviewers must submit a review first"


class NotInstructor(GatingError):
    code = "NotInstructor"
    hint = "only the instructor consolidates inspection results"


class NothingToReview(GatingError):
    code = "NothingToReview"


class WrongPurpose(GatingError):
    code = "WrongPurpose"


class DuplicatePullRequest(GatingError):
    code = "DuplicatePullRequest"


class PullRequestClosed(GatingError):
    code = "PullRequestClosed"


class NotRequestedReviewer(GatingError):
    code = "NotRequestedReviewer"


class MilestoneExists(GatingError):
    code = "MilestoneExists"


class UnknownMilestone(GatingError):
    code = "UnknownMilestone"


class BadAttachment(GatingError):
    code = "BadAttachment"
    hint = "attach a known pull-request id or an 'issue-<n>' reference"


# --- diff / anchoring family (exit 7) -----------------------------------------

class AnchorError(PblError):
    exit_status = 7


class AnchorOutsideDiff(AnchorError):
    code = "AnchorOutsideDiff"
    hint = "comments attach only to lines shown in the PR diff"


class UnknownPr(AnchorError):
    code = "UnknownPr"


class UnknownThread(AnchorError):
    code = "UnknownThread"


class PatchMismatch(AnchorError):
    code = "PatchMismatch"


# --- artifact tooling family (exit 8) ------------------------------------------

class ArtifactError(PblError):
    exit_status = 8


class ParseError(ArtifactError):
    code = "ParseError"

    def __init__(self, message: str, line: int, expected: str = ""):
        super().__init__(message)
        self.line = line
        self.expected = expected


class UnknownArtifact(ArtifactError):
    code = "UnknownArtifact"


class DuplicateSlug(ArtifactError):
    code = "DuplicateSlug"


# --- persistence / CLI family (exit 9, role violations exit 3) ------------------

class PersistError(PblError):
    exit_status = 9


class LockHeld(PersistError):
    code = "LockHeld"
    hint = "another invocation is mutating this project; retry later"


class StateCorrupt(PersistError):
    code = "StateCorrupt"


class ProjectMissing(PersistError):
    code = "ProjectMissing"
    hint = "run 'init' first or pass --project"


class ProjectExists(PersistError):
    code = "ProjectExists"


class UnknownActor(PersistError):
    code = "UnknownActor"
    hint = "pass --actor with a registered member id"


class RoleViolation(PblError):
    code = "RoleViolation"
    exit_status = 3
    hint = "this command is not available to your role"


class UnknownCommand(PblError):
    code = "UnknownCommand"
    exit_status = 2
