"""Commit quality lint.

The motivating case is a "modification commit" whose diff is empty and
whose message says nothing: staff cannot tell what changed. The rule set
is small and fixed; thresholds live in a policy value that the project
file can override.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .vcs import VcsModel

EMPTY_CHANGE = "EmptyChange"
VAGUE_SUBJECT = "VagueSubject"
OVERLONG_SUBJECT = "OverlongSubject"
MISSING_BODY = "MissingBody"


@dataclass(frozen=True)
class LintPolicy:
    min_subject_chars: int = 10
    max_subject_chars: int = 72
    vague_subjects: tuple[str, ...] = ("fix", "update", "wip", "change")
    body_file_threshold: int = 3


@dataclass(frozen=True)
class LintFinding:
    code: str
    message: str


@dataclass
class CommitLintReport:
    commit: str
    findings: list[LintFinding] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.findings


def lint_commit(
    vcs: VcsModel, commit_id: str, policy: LintPolicy | None = None,
) -> CommitLintReport:
    policy = policy or LintPolicy()
    adds, dels = vcs.change_counts(commit_id)  # UnknownCommit if absent
    commit = vcs.commits[commit_id]
    report = CommitLintReport(commit=commit_id)

    if adds + dels == 0:
        report.findings.append(
            LintFinding(EMPTY_CHANGE, "commit changes zero lines")
        )

    message_lines = commit.message.splitlines()
    subject = message_lines[0].strip() if message_lines else ""
    if (
        len(subject) < policy.min_subject_chars
        or subject.lower() in policy.vague_subjects
    ):
        report.findings.append(
            LintFinding(
                VAGUE_SUBJECT,
                f"subject {subject!r} says too little "
                f"(min {policy.min_subject_chars} chars, no stock phrases)",
            )
        )
    if len(subject) > policy.max_subject_chars:
        report.findings.append(
            LintFinding(
                OVERLONG_SUBJECT,
                f"subject is {len(subject)} chars "
                f"(max {policy.max_subject_chars})",
            )
        )
    touched = len(vcs.changed_paths(commit_id))
    if touched > policy.body_file_threshold and len(message_lines) <= 1:
        report.findings.append(
            LintFinding(
                MISSING_BODY,
                f"{touched} files changed but the message has no body",
            )
        )
    return report
