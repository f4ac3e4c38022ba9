"""Line-based diffs between file snapshots.

Produces minimal edit scripts (shortest insert/delete sequence via an LCS
table) grouped into unified-diff hunks with three context lines. Ties in
the edit script always emit deletions before additions, so two runs over
the same inputs render byte-identical output. The text format is pinned
in ``docs/file-formats.md``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import PatchMismatch

CONTEXT_LINES = 3

CONTEXT = "context"
ADD = "add"
DELETE = "delete"

Snapshot = dict[str, list[str]]


@dataclass(frozen=True)
class DiffLine:
    origin: str  # CONTEXT | ADD | DELETE
    text: str


@dataclass
class Hunk:
    """One contiguous diff region. Starts are 1-based; a zero length pins
    the start to the line *before* the insertion/deletion point, as in git."""

    old_start: int
    old_len: int
    new_start: int
    new_len: int
    lines: list[DiffLine] = field(default_factory=list)

    def old_range(self) -> range:
        return range(self.old_start, self.old_start + self.old_len)

    def new_range(self) -> range:
        return range(self.new_start, self.new_start + self.new_len)


@dataclass
class FileDiff:
    path: str
    hunks: list[Hunk] = field(default_factory=list)

    def edit_length(self) -> int:
        """Number of add/delete lines (the edit-script length)."""
        return sum(
            1 for h in self.hunks for ln in h.lines if ln.origin != CONTEXT
        )


def _edit_script(old: list[str], new: list[str]) -> list[tuple[str, str]]:
    """Minimal (op, text) sequence turning old into new.

    Built from a suffix LCS table; at equal cost a deletion is emitted
    before an addition.
    """
    n, m = len(old), len(new)
    # lcs[i][j] = LCS length of old[i:] and new[j:]
    lcs = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, below = lcs[i], lcs[i + 1]
        for j in range(m - 1, -1, -1):
            if old[i] == new[j]:
                row[j] = below[j + 1] + 1
            else:
                bj = below[j]
                rj = row[j + 1]
                row[j] = bj if bj >= rj else rj

    ops: list[tuple[str, str]] = []
    i = j = 0
    while i < n and j < m:
        if old[i] == new[j] and lcs[i][j] == lcs[i + 1][j + 1] + 1:
            ops.append((CONTEXT, old[i]))
            i += 1
            j += 1
        elif lcs[i + 1][j] >= lcs[i][j + 1]:
            ops.append((DELETE, old[i]))
            i += 1
        else:
            ops.append((ADD, new[j]))
            j += 1
    ops.extend((DELETE, line) for line in old[i:])
    ops.extend((ADD, line) for line in new[j:])
    return ops


def compute_file_diff(
    old: list[str], new: list[str], context: int = CONTEXT_LINES,
) -> list[Hunk]:
    """Hunks for one file; empty list when the sides are identical."""
    if old == new:
        return []
    ops = _edit_script(old, new)

    # Indices into ops of non-context entries, grouped into hunks whenever
    # the context gap between change runs is small enough to share.
    change_idx = [k for k, (op, _) in enumerate(ops) if op != CONTEXT]
    groups: list[tuple[int, int]] = []  # inclusive op-index spans
    start = prev = change_idx[0]
    for k in change_idx[1:]:
        if k - prev - 1 > 2 * context:
            groups.append((start, prev))
            start = k
        prev = k
    groups.append((start, prev))

    # Old/new line number (1-based) at which each op starts.
    old_at = []
    new_at = []
    o, nn = 1, 1
    for op, _ in ops:
        old_at.append(o)
        new_at.append(nn)
        if op != ADD:
            o += 1
        if op != DELETE:
            nn += 1

    hunks = []
    for g_start, g_end in groups:
        lo = max(0, g_start - context)
        hi = min(len(ops) - 1, g_end + context)
        lines = [DiffLine(op, text) for op, text in ops[lo: hi + 1]]
        old_len = sum(1 for ln in lines if ln.origin != ADD)
        new_len = sum(1 for ln in lines if ln.origin != DELETE)
        # Zero-length sides anchor to the preceding line, per git.
        old_start = old_at[lo] if old_len else old_at[lo] - 1
        new_start = new_at[lo] if new_len else new_at[lo] - 1
        hunks.append(Hunk(old_start, old_len, new_start, new_len, lines))
    return hunks


def compute_diff(
    old: Snapshot, new: Snapshot, context: int = CONTEXT_LINES,
) -> list[FileDiff]:
    """Per-file diffs between two snapshots, sorted by path.

    Files present on one side only come out as pure additions/deletions;
    unchanged files are omitted.
    """
    diffs = []
    for path in sorted(set(old) | set(new)):
        hunks = compute_file_diff(old.get(path, []), new.get(path, []), context)
        if hunks:
            diffs.append(FileDiff(path, hunks))
    return diffs


def change_counts(diffs: list[FileDiff]) -> tuple[int, int]:
    """(additions, deletions) summed over all files."""
    adds = dels = 0
    for fd in diffs:
        for hunk in fd.hunks:
            for line in hunk.lines:
                if line.origin == ADD:
                    adds += 1
                elif line.origin == DELETE:
                    dels += 1
    return adds, dels


def apply_file_diff(old: list[str], hunks: list[Hunk]) -> list[str]:
    """Apply hunks to the old file, verifying context/delete lines match."""
    out: list[str] = []
    cursor = 0  # 0-based index into old
    for hunk in hunks:
        lead = hunk.old_start - 1 if hunk.old_len else hunk.old_start
        if lead < cursor:
            raise PatchMismatch(f"overlapping hunk at old line {hunk.old_start}")
        out.extend(old[cursor:lead])
        cursor = lead
        for line in hunk.lines:
            if line.origin == ADD:
                out.append(line.text)
                continue
            if cursor >= len(old) or old[cursor] != line.text:
                raise PatchMismatch(
                    f"{line.origin} line mismatch at old line {cursor + 1}"
                )
            if line.origin == CONTEXT:
                out.append(line.text)
            cursor += 1
    out.extend(old[cursor:])
    return out


def apply_diff(old: Snapshot, diffs: list[FileDiff]) -> Snapshot:
    """Apply per-file diffs to a snapshot.

    Snapshots never hold empty files (an empty file equals an absent one
    for diff purposes), so a file patched down to zero lines disappears.
    """
    new: Snapshot = {path: list(lines) for path, lines in old.items()}
    for fd in diffs:
        patched = apply_file_diff(old.get(fd.path, []), fd.hunks)
        if patched:
            new[fd.path] = patched
        else:
            new.pop(fd.path, None)
    return new


_ORIGIN_MARK = {CONTEXT: " ", ADD: "+", DELETE: "-"}
_HUNK_RE = re.compile(r"^@@ -(\d+),(\d+) \+(\d+),(\d+) @@$")


def render_unified(diffs: list[FileDiff]) -> str:
    """Unified-diff text: '--- a/<path>', '+++ b/<path>', '@@ -o,l +n,m @@'.

    Counts are always explicit (no ',1' elision) so output is stable for
    golden tests.
    """
    out: list[str] = []
    for fd in diffs:
        out.append(f"--- a/{fd.path}")
        out.append(f"+++ b/{fd.path}")
        for hunk in fd.hunks:
            out.append(
                f"@@ -{hunk.old_start},{hunk.old_len} "
                f"+{hunk.new_start},{hunk.new_len} @@"
            )
            out.extend(_ORIGIN_MARK[ln.origin] + ln.text for ln in hunk.lines)
    return "\n".join(out) + ("\n" if out else "")


def parse_unified(text: str) -> list[FileDiff]:
    """Parse text produced by render_unified back into FileDiff values."""
    diffs: list[FileDiff] = []
    current: FileDiff | None = None
    hunk: Hunk | None = None
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("--- a/"):
            path = line[len("--- a/"):]
            plus = lines[i + 1] if i + 1 < len(lines) else ""
            if plus != f"+++ b/{path}":
                raise PatchMismatch(f"bad file header pair at line {i + 1}")
            current = FileDiff(path)
            diffs.append(current)
            hunk = None
            i += 2
            continue
        m = _HUNK_RE.match(line)
        if m:
            if current is None:
                raise PatchMismatch(f"hunk header before file header at line {i + 1}")
            hunk = Hunk(*(int(g) for g in m.groups()))
            current.hunks.append(hunk)
            i += 1
            continue
        if line and line[0] in " +-" and hunk is not None:
            origin = {" ": CONTEXT, "+": ADD, "-": DELETE}[line[0]]
            hunk.lines.append(DiffLine(origin, line[1:]))
            i += 1
            continue
        raise PatchMismatch(f"unrecognized diff line {i + 1}: {line!r}")
    return diffs
