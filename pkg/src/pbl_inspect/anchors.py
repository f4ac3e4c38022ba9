"""Line-anchored review comment threads and their survival across edits.

A comment attaches to a (path, side, line) address inside the current PR
diff; context lines count as commentable, untouched lines outside hunks do
not. When new commits land on the PR's source branch, new-side anchors are
re-addressed through the incremental diff: lines that survived move with
the edit, lines that were deleted or rewritten mark their threads outdated
(the thread text itself is never dropped).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .diffs import CONTEXT, DELETE, ADD, FileDiff
from .errors import AnchorOutsideDiff

OLD_SIDE = "old"
NEW_SIDE = "new"

LIVE = "live"
OUTDATED = "outdated"


@dataclass(frozen=True)
class DiffAnchor:
    path: str
    side: str  # OLD_SIDE | NEW_SIDE
    line: int  # 1-based
    status: str = LIVE


@dataclass(frozen=True)
class ThreadComment:
    author: str
    body: str


@dataclass
class AnchoredThread:
    anchor: DiffAnchor
    comments: list[ThreadComment] = field(default_factory=list)
    resolved: bool = False

    def opener(self) -> str:
        return self.comments[0].author

    def reply(self, author: str, body: str) -> None:
        self.comments.append(ThreadComment(author, body))


def line_in_hunks(diffs_: list[FileDiff], path: str, side: str, line: int) -> bool:
    """True iff the address lies within some hunk of the diff (context
    lines included) on the given side."""
    if side not in (OLD_SIDE, NEW_SIDE):
        raise ValueError(f"side must be 'old' or 'new', got {side!r}")
    for fd in diffs_:
        if fd.path != path:
            continue
        for hunk in fd.hunks:
            covered = hunk.old_range() if side == OLD_SIDE else hunk.new_range()
            if line in covered:
                return True
    return False


def place_anchor(
    diffs_: list[FileDiff], path: str, side: str, line: int,
) -> DiffAnchor:
    """Validate an address against the current diff and mint a live anchor.

    Rejecting out-of-hunk lines is the point: content already merged away
    shows no differences and cannot take line comments.
    """
    if not line_in_hunks(diffs_, path, side, line):
        raise AnchorOutsideDiff(
            f"{path}:{line} ({side} side) is outside the current diff"
        )
    return DiffAnchor(path=path, side=side, line=line, status=LIVE)


def open_thread(
    diffs_: list[FileDiff], path: str, side: str, line: int,
    author: str, body: str,
) -> AnchoredThread:
    anchor = place_anchor(diffs_, path, side, line)
    return AnchoredThread(anchor=anchor, comments=[ThreadComment(author, body)])


def thread_to_dict(thread: AnchoredThread) -> dict:
    return {
        "anchor": {
            "path": thread.anchor.path,
            "side": thread.anchor.side,
            "line": thread.anchor.line,
            "status": thread.anchor.status,
        },
        "comments": [{"author": c.author, "body": c.body} for c in thread.comments],
        "resolved": thread.resolved,
    }


def thread_from_dict(raw: dict) -> AnchoredThread:
    a = raw["anchor"]
    return AnchoredThread(
        anchor=DiffAnchor(a["path"], a["side"], a["line"], a["status"]),
        comments=[ThreadComment(c["author"], c["body"]) for c in raw["comments"]],
        resolved=raw["resolved"],
    )


def round_base_of(pr, vcs) -> str:
    """Base commit of a PR's diff: the merge base of target and source heads.

    Because a round-2 branch forks from the round-1 head, this makes the
    second inspection's diff contain only changes made after round 1.
    """
    return vcs.merge_base(vcs.resolve(pr.target), vcs.resolve(pr.source))


class LineMap:
    """Old-line -> new-line mapping induced by one file's hunks.

    Lines outside hunks map by cumulative offset; context lines map to
    their paired position; deleted lines map to None.
    """

    def __init__(self, hunks):
        self._explicit: dict[int, int | None] = {}
        old_cursor = 1
        new_cursor = 1
        for hunk in hunks:
            old_at = hunk.old_start if hunk.old_len else hunk.old_start + 1
            new_at = hunk.new_start if hunk.new_len else hunk.new_start + 1
            # identity-with-offset region before this hunk
            for line in range(old_cursor, old_at):
                self._explicit[line] = line + (new_cursor - old_cursor)
            o, n = old_at, new_at
            for dl in hunk.lines:
                if dl.origin == CONTEXT:
                    self._explicit[o] = n
                    o += 1
                    n += 1
                elif dl.origin == DELETE:
                    self._explicit[o] = None
                    o += 1
                else:  # ADD
                    n += 1
            old_cursor, new_cursor = o, n
        self._tail_start = old_cursor
        self._tail_offset = new_cursor - old_cursor

    def map(self, old_line: int) -> int | None:
        if old_line in self._explicit:
            return self._explicit[old_line]
        if old_line >= self._tail_start:
            return old_line + self._tail_offset
        return old_line  # before any recorded region (no hunks touched it)


def remap_anchors(
    threads: list[AnchoredThread], incremental: list[FileDiff],
) -> list[AnchoredThread]:
    """Re-address threads after new commits changed the PR source.

    ``incremental`` is the diff from the previously anchored head to the
    new head. Old-side anchors reference the immutable round base and never
    move. Comment bodies and resolution flags are preserved verbatim.
    """
    maps = {fd.path: LineMap(fd.hunks) for fd in incremental}
    out = []
    for thread in threads:
        anchor = thread.anchor
        if (
            anchor.side == NEW_SIDE
            and anchor.status == LIVE
            and anchor.path in maps
        ):
            target = maps[anchor.path].map(anchor.line)
            if target is None:
                anchor = DiffAnchor(anchor.path, anchor.side, anchor.line, OUTDATED)
            elif target != anchor.line:
                anchor = DiffAnchor(anchor.path, anchor.side, target, LIVE)
        out.append(
            AnchoredThread(
                anchor=anchor,
                comments=list(thread.comments),
                resolved=thread.resolved,
            )
        )
    return out
