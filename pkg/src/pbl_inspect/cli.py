"""Role-aware command line driving the whole inspection lifecycle.

Typical session, in order: ``init``, ``add-artifact``, ``branch-inspection``,
``branch-work``, ``commit``, ``pr-open``, ``review``, ``pr-merge``,
``request-inspection``, ``comment``/``reply``, ``complete-inspection``,
``merge-master``. Every command loads the project file, applies exactly one
operation, persists atomically, and appends one event-log entry; a failing
command leaves the project file byte-identical.

Exit statuses: 0 success, 2 usage, 3 role violation, 4 workflow, 5 branch
topology, 6 review gating, 7 diff/anchoring, 8 artifact tooling,
9 persistence/locking.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import artifacts, commitlint, forge, topology, workflow
from .anchors import LIVE, NEW_SIDE, OLD_SIDE, AnchoredThread
from .diffs import ADD, DELETE, FileDiff, render_unified
from .errors import PblError, RoleViolation, UnknownActor
from .forge import INSPECTION, ReviewVerdict
from .project import (
    Member,
    ProjectState,
    ROLE_INSTRUCTOR,
    ROLE_STUDENT,
    ROLE_TA,
    append_event,
    init_project,
    load_project,
    project_lock,
    save_project,
    state_dir,
)
from .vcs import VcsModel
from .workflow import ArtifactFormat, ArtifactKind, Verdict

ALL_ROLES = {ROLE_STUDENT, ROLE_TA, ROLE_INSTRUCTOR}
STAFF_ROLES = {ROLE_TA, ROLE_INSTRUCTOR}

#: Which roles may run which command. Read-only reporting is open to all;
#: branch/PR work belongs to students; only the instructor consolidates
#: inspections and owns the artifact catalog.
ROLE_MATRIX: dict[str, set[str]] = {
    "init": {ROLE_INSTRUCTOR},
    "add-artifact": {ROLE_INSTRUCTOR},
    "branch-inspection": {ROLE_STUDENT},
    "branch-work": {ROLE_STUDENT},
    "commit": {ROLE_STUDENT},
    "pr-open": {ROLE_STUDENT},
    "review": ALL_ROLES,
    "pr-merge": {ROLE_STUDENT},
    "request-inspection": {ROLE_STUDENT},
    "comment": ALL_ROLES,
    "reply": ALL_ROLES,
    "complete-inspection": {ROLE_INSTRUCTOR},
    "merge-master": {ROLE_STUDENT},
    "milestone-add": {ROLE_INSTRUCTOR},
    "milestone-attach": ALL_ROLES,
    "milestone-close": ALL_ROLES,
    "status": ALL_ROLES,
    "show-diff": ALL_ROLES,
    "lint-commits": ALL_ROLES,
    "validate": ALL_ROLES,
}

#: Commands that only read state; they skip the save step entirely.
READ_ONLY = {"status", "show-diff", "lint-commits", "validate"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pbl-inspect",
        description="Pull-request based inspection workflow for course projects.",
    )
    parser.add_argument("--project", default=".", help="project directory")
    parser.add_argument("--actor", default=None, help="acting member id")
    parser.add_argument(
        "--backend", choices=("memory", "git"), default="memory",
        help="version-control backend (only 'memory' is bundled)",
    )
    parser.add_argument(
        "--json", action="store_true", help="machine-readable output",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a project")
    p.add_argument("--name", required=True)
    p.add_argument("--instructor", required=True)
    p.add_argument("--ta", action="append", default=[], metavar="ID")
    p.add_argument("--student", action="append", default=[], metavar="ID")
    p.add_argument(
        "--group", action="append", default=[], metavar="GID=ID,ID",
        help="group membership, repeatable",
    )

    p = sub.add_parser("add-artifact", help="register an artifact")
    p.add_argument("slug")
    p.add_argument("--name", required=True)
    p.add_argument("--kind", required=True, choices=[k.value for k in ArtifactKind])
    p.add_argument("--format", choices=[f.value for f in ArtifactFormat])
    p.add_argument("--group")

    p = sub.add_parser("branch-inspection", help="create an inspection branch")
    p.add_argument("slug")
    p.add_argument("--round", type=int, choices=(1, 2))

    p = sub.add_parser("branch-work", help="create a work branch")
    p.add_argument("task")
    p.add_argument("--artifact", required=True, metavar="SLUG")
    p.add_argument("--owner", help="defaults to the actor")
    p.add_argument("--name", help="explicit branch name instead of <owner>/<task>")

    p = sub.add_parser("commit", help="commit file edits to a branch")
    p.add_argument("--branch", required=True)
    p.add_argument("-m", "--message", required=True)
    p.add_argument(
        "--set", action="append", default=[], metavar="PATH=TEXT",
        help="set file content; TEXT starting with @ reads a local file",
    )
    p.add_argument("--delete", action="append", default=[], metavar="PATH")

    p = sub.add_parser("pr-open", help="open a group-review pull request")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--title", required=True)

    p = sub.add_parser("review", help="submit a review on a pull request")
    p.add_argument("pr")
    p.add_argument(
        "--verdict", required=True, choices=[v.value for v in ReviewVerdict],
    )

    p = sub.add_parser("pr-merge", help="merge a pull request")
    p.add_argument("pr")

    p = sub.add_parser("request-inspection", help="request staff inspection")
    p.add_argument("slug")

    p = sub.add_parser("comment", help="open a line-anchored comment thread")
    p.add_argument("pr")
    p.add_argument("--path", required=True)
    p.add_argument("--side", choices=(OLD_SIDE, NEW_SIDE), default=NEW_SIDE)
    p.add_argument("--line", type=int, required=True)
    p.add_argument("-m", "--message", required=True)

    p = sub.add_parser("reply", help="reply to a comment thread")
    p.add_argument("pr")
    p.add_argument("--thread", type=int, required=True)
    p.add_argument("-m", "--message", required=True)
    p.add_argument("--resolve", action="store_true")

    p = sub.add_parser("complete-inspection", help="consolidate a round's result")
    p.add_argument("slug")
    p.add_argument("--verdict", required=True, choices=[v.value for v in Verdict])

    p = sub.add_parser("merge-master", help="merge an approved artifact to master")
    p.add_argument("slug")

    p = sub.add_parser("milestone-add", help="create a milestone")
    p.add_argument("title")
    p.add_argument("--due", required=True, metavar="YYYY-MM-DD")

    p = sub.add_parser("milestone-attach", help="attach a PR/issue to a milestone")
    p.add_argument("title")
    p.add_argument("item")

    p = sub.add_parser("milestone-close", help="close an attached item")
    p.add_argument("title")
    p.add_argument("item")

    sub.add_parser("status", help="project progress report")

    p = sub.add_parser("show-diff", help="round-scoped diff with threads")
    p.add_argument("pr")

    p = sub.add_parser("lint-commits", help="commit quality report")
    p.add_argument("--branch", help="limit to commits reachable from a branch")

    p = sub.add_parser("validate", help="validate an artifact file")
    p.add_argument("--artifact", required=True, metavar="SLUG")
    p.add_argument("--path", required=True, help="file path inside the repo")
    p.add_argument("--branch", help="read from this branch (default master)")
    p.add_argument("--file", help="read a local file instead of the repo")

    return parser


# --- command handlers -----------------------------------------------------------
# Each returns (data for --json, human-readable text).


def cmd_init(args) -> tuple[dict, str]:
    if args.actor != args.instructor:
        raise RoleViolation("init must be run by the declared instructor")
    members = [Member(args.instructor, ROLE_INSTRUCTOR)]
    members += [Member(ta, ROLE_TA) for ta in args.ta]
    members += [Member(s, ROLE_STUDENT) for s in args.student]
    groups: dict[str, list[str]] = {}
    for spec in args.group:
        gid, _, ids = spec.partition("=")
        if not gid or not ids:
            raise UnknownActor(f"bad --group value: {spec!r} (want GID=ID,ID)")
        groups[gid] = [i.strip() for i in ids.split(",") if i.strip()]
    state = ProjectState(
        project_name=args.name,
        members=members,
        groups=groups,
        vcs=VcsModel.bootstrap(author=args.instructor),
    )
    root = Path(args.project)
    init_project(state, root)
    return (
        {"project": args.name, "members": len(members), "groups": sorted(groups)},
        f"initialized project '{args.name}' in {state_dir(root)}",
    )


def cmd_add_artifact(state: ProjectState, args) -> tuple[dict, str]:
    record = state.add_artifact(
        slug=args.slug,
        name=args.name,
        kind=ArtifactKind(args.kind),
        format_=ArtifactFormat(args.format) if args.format else None,
        group=args.group,
    )
    return (
        {"id": record.id, "slug": record.slug, "format": record.format.value},
        f"registered artifact {record.slug} ({record.kind.value}, "
        f"{record.format.value}) as {record.id}",
    )


def cmd_branch_inspection(state: ProjectState, args) -> tuple[dict, str]:
    record = state.artifact_by_slug(args.slug)
    round_ = args.round
    if round_ is None:
        round_ = 2 if state.naming.inspection_name(args.slug, 1) in state.vcs.branches else 1
    name = topology.create_inspection_branch(
        state.vcs, record.slug, round_, state.naming,
    )
    return (
        {"branch": name, "round": round_},
        f"created inspection branch {name} (round {round_})",
    )


def cmd_branch_work(state: ProjectState, args) -> tuple[dict, str]:
    owner = args.owner or args.actor
    name = topology.create_work_branch(
        state.vcs, owner, args.task, args.artifact, state.naming, name=args.name,
    )
    if args.name:
        state.register_work_branch(args.name, owner, args.task)
    return ({"branch": name}, f"created work branch {name}")


def cmd_commit(state: ProjectState, args) -> tuple[dict, str]:
    changes: dict[str, list[str] | None] = {}
    for item in args.set:
        path, sep, value = item.partition("=")
        if not sep:
            raise PblError(f"bad --set value: {item!r} (want PATH=TEXT)")
        if value.startswith("@"):
            value = Path(value[1:]).read_text(encoding="utf-8")
        changes[path] = value.splitlines()
    for path in args.delete:
        changes[path] = None
    cid = state.apply_commit(args.branch, changes, args.message, args.actor)
    adds, dels = state.vcs.change_counts(cid)
    return (
        {"commit": cid, "additions": adds, "deletions": dels},
        f"{cid} on {args.branch}: +{adds} -{dels}",
    )


def cmd_pr_open(state: ProjectState, args) -> tuple[dict, str]:
    pr = forge.open_group_review_pr(
        state, args.source, args.target, args.title, author=args.actor,
    )
    return (
        {"pr": pr.id, "source": pr.source, "target": pr.target},
        f"opened {pr.id}: {pr.source} -> {pr.target}",
    )


def cmd_review(state: ProjectState, args) -> tuple[dict, str]:
    review = forge.submit_review(
        state, args.pr, args.actor, ReviewVerdict(args.verdict),
    )
    return (
        {"pr": args.pr, "verdict": review.verdict.value},
        f"recorded {review.verdict.value} review by {args.actor} on {args.pr}",
    )


def cmd_pr_merge(state: ProjectState, args) -> tuple[dict, str]:
    head = forge.merge_pull_request(state, args.pr, args.actor)
    pr = state.forge.get(args.pr)
    return (
        {"pr": args.pr, "merge_commit": head},
        f"merged {args.pr} into {pr.target} at {head}",
    )


def cmd_request_inspection(state: ProjectState, args) -> tuple[dict, str]:
    pr = forge.request_inspection(state, args.slug, actor=args.actor)
    staff = ", ".join(sorted(pr.requested_reviewers))
    return (
        {
            "pr": pr.id,
            "round": pr.purpose.round,
            "reviewers": sorted(pr.requested_reviewers),
        },
        f"opened {pr.id} (inspection round {pr.purpose.round}); notified {staff}",
    )


def cmd_comment(state: ProjectState, args) -> tuple[dict, str]:
    forge.add_comment(
        state, args.pr, args.path, args.side, args.line, args.actor, args.message,
    )
    pr = state.forge.get(args.pr)
    return (
        {"pr": args.pr, "thread": len(pr.comment_threads)},
        f"thread #{len(pr.comment_threads)} opened at "
        f"{args.path}:{args.line} ({args.side} side)",
    )


def cmd_reply(state: ProjectState, args) -> tuple[dict, str]:
    thread = forge.reply_to_thread(
        state, args.pr, args.thread, args.actor, args.message,
        resolve=args.resolve,
    )
    return (
        {"pr": args.pr, "thread": args.thread, "resolved": thread.resolved},
        f"reply added to thread #{args.thread} on {args.pr}",
    )


def cmd_complete_inspection(state: ProjectState, args) -> tuple[dict, str]:
    batch = forge.complete_inspection(
        state, args.slug, args.actor, Verdict(args.verdict),
    )
    record = state.artifact_by_slug(args.slug)
    return (
        {
            "slug": args.slug,
            "verdict": args.verdict,
            "phase": record.phase.label(),
            "notified": [n.recipient for n in batch],
        },
        f"inspection of {args.slug} completed: {args.verdict}; "
        f"phase is now {record.phase.label()}; notified {len(batch)} member(s)",
    )


def cmd_merge_master(state: ProjectState, args) -> tuple[dict, str]:
    head = forge.merge_to_master(state, args.slug, args.actor)
    return (
        {"slug": args.slug, "master": head},
        f"{args.slug} merged to master at {head}",
    )


def cmd_milestone_add(state: ProjectState, args) -> tuple[dict, str]:
    forge.add_milestone(state, args.title, args.due)
    return (
        {"milestone": args.title, "due": args.due},
        f"milestone '{args.title}' due {args.due}",
    )


def cmd_milestone_attach(state: ProjectState, args) -> tuple[dict, str]:
    forge.attach_to_milestone(state, args.title, args.item)
    return (
        {"milestone": args.title, "item": args.item},
        f"attached {args.item} to '{args.title}'",
    )


def cmd_milestone_close(state: ProjectState, args) -> tuple[dict, str]:
    forge.close_milestone_item(state, args.title, args.item)
    milestone = forge.get_milestone(state, args.title)
    ratio = forge.milestone_progress(milestone)
    return (
        {"milestone": args.title, "item": args.item, "progress": ratio},
        f"closed {args.item}; '{args.title}' at {ratio:.0%}",
    )


def cmd_status(state: ProjectState, args) -> tuple[dict, str]:
    lines = [f"project: {state.project_name}"]
    data: dict = {"project": state.project_name, "artifacts": [], "milestones": []}

    lines.append("artifacts:")
    for record in sorted(state.artifacts, key=lambda a: a.slug):
        lines.append(
            f"  {record.slug}: {record.phase.label()}, "
            f"rounds used {record.rounds_used}/{workflow.MAX_ROUNDS}"
        )
        data["artifacts"].append(
            {
                "slug": record.slug,
                "phase": record.phase.label(),
                "rounds_used": record.rounds_used,
            }
        )

    open_inspections = [
        pr for pr in state.forge.open_prs() if pr.purpose.kind == INSPECTION
    ]
    if open_inspections:
        lines.append("open inspections:")
        data["open_inspections"] = []
        for pr in sorted(open_inspections, key=lambda p: p.id):
            reviewed = {r.author for r in pr.reviews}
            pending = [m for m in state.staff_ids() if m not in reviewed]
            lines.append(
                f"  {pr.id} round {pr.purpose.round} "
                f"({pr.source} -> {pr.target}), reviewers pending: "
                + (", ".join(pending) if pending else "none")
            )
            data["open_inspections"].append(
                {"pr": pr.id, "round": pr.purpose.round, "pending": pending}
            )

    lines.append("milestones:")
    for title in sorted(state.forge.milestones):
        milestone = state.forge.milestones[title]
        ratio = forge.milestone_progress(milestone)
        closed = sum(1 for s in milestone.items.values() if s == "closed")
        lines.append(
            f"  {title}: due {milestone.due}, {ratio:.0%} "
            f"({closed}/{len(milestone.items)})"
        )
        data["milestones"].append(
            {"title": title, "due": milestone.due, "progress": ratio}
        )
    return data, "\n".join(lines)


def _render_threads(thread_no: int, thread: AnchoredThread, indent: str) -> list[str]:
    tag = f"[#{thread_no}]"
    if thread.resolved:
        tag += "[resolved]"
    out = [f"{indent}{tag} {thread.comments[0].author}: {thread.comments[0].body}"]
    out.extend(
        f"{indent}    {c.author}: {c.body}" for c in thread.comments[1:]
    )
    return out


def render_pr_diff(state: ProjectState, pr_id: str) -> tuple[dict, str]:
    pr = state.forge.get(pr_id)
    diffs_ = forge.pr_diff(state, pr)
    lines = [
        f"{pr.id}: {pr.source} -> {pr.target} ({pr.state}) "
        f"{pr.purpose.kind}"
        + (f" round {pr.purpose.round}" if pr.purpose.round else "")
    ]
    if pr.labels:
        lines.append("labels: " + ", ".join(sorted(pr.labels)))

    live = [
        (no, t) for no, t in enumerate(pr.comment_threads, start=1)
        if t.anchor.status == LIVE
    ]
    outdated = [
        (no, t) for no, t in enumerate(pr.comment_threads, start=1)
        if t.anchor.status != LIVE
    ]

    for fd in diffs_:
        lines.append(f"--- a/{fd.path}")
        lines.append(f"+++ b/{fd.path}")
        for hunk in fd.hunks:
            lines.append(
                f"@@ -{hunk.old_start},{hunk.old_len} "
                f"+{hunk.new_start},{hunk.new_len} @@"
            )
            old_no, new_no = hunk.old_start, hunk.new_start
            for dl in hunk.lines:
                mark = "+" if dl.origin == ADD else "-" if dl.origin == DELETE else " "
                lines.append(mark + dl.text)
                for no, thread in live:
                    a = thread.anchor
                    if a.path != fd.path:
                        continue
                    hit = (
                        a.side == NEW_SIDE and dl.origin != DELETE and a.line == new_no
                    ) or (
                        a.side == OLD_SIDE and dl.origin != ADD and a.line == old_no
                    )
                    if hit:
                        lines.extend(_render_threads(no, thread, "      "))
                if dl.origin != ADD:
                    old_no += 1
                if dl.origin != DELETE:
                    new_no += 1

    if outdated:
        lines.append("outdated threads:")
        for no, thread in outdated:
            a = thread.anchor
            lines.append(f"  {a.path}:{a.line} ({a.side} side)")
            lines.extend(_render_threads(no, thread, "    "))

    data = {
        "pr": pr.id,
        "diff": render_unified(diffs_),
        "threads": len(pr.comment_threads),
        "outdated": [no for no, _ in outdated],
    }
    return data, "\n".join(lines)


def cmd_show_diff(state: ProjectState, args) -> tuple[dict, str]:
    return render_pr_diff(state, args.pr)


def cmd_lint_commits(state: ProjectState, args) -> tuple[dict, str]:
    if args.branch:
        commit_ids = sorted(state.vcs.ancestor_set(state.vcs.resolve(args.branch)))
    else:
        commit_ids = sorted(state.vcs.commits)
    reports = [
        commitlint.lint_commit(state.vcs, cid, state.lint) for cid in commit_ids
    ]
    flagged = [r for r in reports if not r.clean]
    lines = []
    for report in flagged:
        message = state.vcs.commits[report.commit].message.splitlines()
        subject = message[0] if message else ""
        lines.append(f"{report.commit} {subject!r}")
        lines.extend(f"  {f.code}: {f.message}" for f in report.findings)
    if not flagged:
        lines.append(f"all {len(reports)} commit(s) clean")
    data = {
        "checked": len(reports),
        "flagged": [
            {
                "commit": r.commit,
                "findings": [{"code": f.code, "message": f.message} for f in r.findings],
            }
            for r in flagged
        ],
    }
    return data, "\n".join(lines)


def cmd_validate(state: ProjectState, args) -> tuple[dict, str]:
    record = state.artifact_by_slug(args.artifact)
    if args.file:
        content = Path(args.file).read_bytes()
    else:
        branch = args.branch or state.naming.master_name
        snapshot = state.vcs.head_snapshot(branch)
        if args.path not in snapshot:
            content = b""
        else:
            content = ("\n".join(snapshot[args.path]) + "\n").encode("utf-8")
    result = artifacts.validate_text_artifact(args.path, record.kind, content)
    if result.ok:
        text = f"{args.path}: ok ({record.kind.value})"
    else:
        text = "\n".join(
            f"{args.path}:{v.line}: {v.code}: {v.message}" for v in result.violations
        )
    data = {
        "path": args.path,
        "ok": result.ok,
        "violations": [
            {"code": v.code, "line": v.line, "message": v.message}
            for v in result.violations
        ],
    }
    return data, text


HANDLERS = {
    "add-artifact": cmd_add_artifact,
    "branch-inspection": cmd_branch_inspection,
    "branch-work": cmd_branch_work,
    "commit": cmd_commit,
    "pr-open": cmd_pr_open,
    "review": cmd_review,
    "pr-merge": cmd_pr_merge,
    "request-inspection": cmd_request_inspection,
    "comment": cmd_comment,
    "reply": cmd_reply,
    "complete-inspection": cmd_complete_inspection,
    "merge-master": cmd_merge_master,
    "milestone-add": cmd_milestone_add,
    "milestone-attach": cmd_milestone_attach,
    "milestone-close": cmd_milestone_close,
    "status": cmd_status,
    "show-diff": cmd_show_diff,
    "lint-commits": cmd_lint_commits,
    "validate": cmd_validate,
}


def _emit(args, data: dict, text: str) -> None:
    if args.json:
        print(json.dumps({"ok": True, "command": args.command, "data": data}))
    elif text:
        print(text)


def _emit_error(args, exc: PblError) -> None:
    if getattr(args, "json", False):
        print(
            json.dumps(
                {
                    "ok": False,
                    "error": exc.code,
                    "message": str(exc),
                    "hint": exc.hint,
                }
            )
        )
    else:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        if exc.hint:
            print(f"hint: {exc.hint}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    command_str = " ".join(argv)
    root = Path(args.project)

    if args.backend != "memory":
        exc = PblError(
            "the 'git' backend adapter is not bundled; use --backend memory",
        )
        exc.code = "BackendUnavailable"
        exc.exit_status = 9
        _emit_error(args, exc)
        return exc.exit_status

    if args.actor is None:
        exc = UnknownActor("--actor is required")
        _emit_error(args, exc)
        return exc.exit_status

    if args.command == "init":
        try:
            data, text = cmd_init(args)
        except PblError as exc:
            _emit_error(args, exc)
            return exc.exit_status
        append_event(root, args.actor, command_str, "ok")
        _emit(args, data, text)
        return 0

    try:
        with project_lock(root):
            state = load_project(root)
            try:
                role = state.role_of(args.actor)
                allowed = ROLE_MATRIX[args.command]
                if role not in allowed:
                    raise RoleViolation(
                        f"'{args.command}' is not available to role '{role}'"
                    )
                handler = HANDLERS[args.command]
                data, text = handler(state, args)
                if args.command not in READ_ONLY:
                    save_project(state, root)
            except PblError as exc:
                append_event(root, args.actor, command_str, exc.code)
                _emit_error(args, exc)
                return exc.exit_status
            append_event(root, args.actor, command_str, "ok")
    except PblError as exc:
        # lock/load failures happen before any event can be recorded safely
        _emit_error(args, exc)
        return exc.exit_status

    _emit(args, data, text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
