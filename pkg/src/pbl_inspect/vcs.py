"""In-memory version control model: commit DAG, branches, file snapshots.

Every commit stores the full file tree (desk-scale projects; simplicity
over space) plus the add/delete line counts of its diff against the first
parent. Commit ids are sequential and zero-padded, which makes runs
reproducible and gives merge-base tie-breaking a stable order.

``VcsBackend`` is the adapter seam: a real Git backend must match these
semantics bit for bit (the conformance tests in the test suite run
against any backend implementing it).
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

from . import diffs
from .errors import BranchExists, BranchMissing, NoCommonAncestor, UnknownCommit

Snapshot = dict[str, list[str]]


@dataclass
class Commit:
    id: str
    parents: tuple[str, ...]
    snapshot: Snapshot
    message: str
    author: str
    additions: int
    deletions: int


class VcsBackend(ABC):
    """Adapter contract for a version-control substrate."""

    @abstractmethod
    def create_branch(self, name: str, at: str) -> None: ...

    @abstractmethod
    def resolve(self, branch: str) -> str: ...

    @abstractmethod
    def branch_names(self) -> list[str]: ...

    @abstractmethod
    def set_branch(self, name: str, commit_id: str) -> None: ...

    @abstractmethod
    def commit_snapshot(
        self, branch: str, snapshot: Snapshot, message: str, author: str,
        extra_parents: tuple[str, ...] = (),
    ) -> str: ...

    @abstractmethod
    def snapshot_of(self, commit_id: str) -> Snapshot: ...

    @abstractmethod
    def parents_of(self, commit_id: str) -> tuple[str, ...]: ...

    @abstractmethod
    def merge_base(self, a: str, b: str) -> str: ...

    @abstractmethod
    def change_counts(self, commit_id: str) -> tuple[int, int]: ...


def _normalize(snapshot: Snapshot) -> Snapshot:
    """Drop empty files: a zero-line file is indistinguishable from an
    absent one in a line diff, so snapshots never store them."""
    return {path: list(lines) for path, lines in snapshot.items() if lines}


class VcsModel(VcsBackend):
    """The in-memory reference backend."""

    def __init__(self):
        self.commits: dict[str, Commit] = {}
        self.branches: dict[str, str] = {}
        self._next_commit = 1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VcsModel):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    # --- construction ---------------------------------------------------

    @classmethod
    def bootstrap(cls, master: str = "master", author: str = "system") -> "VcsModel":
        """Fresh repository with an empty root commit on the master branch."""
        vcs = cls()
        root = vcs._new_commit((), {}, "Initial commit", author)
        vcs.branches[master] = root
        return vcs

    def _new_commit(
        self, parents: tuple[str, ...], snapshot: Snapshot, message: str, author: str,
    ) -> str:
        snapshot = _normalize(snapshot)
        base: Snapshot = self.commits[parents[0]].snapshot if parents else {}
        adds, dels = diffs.change_counts(diffs.compute_diff(base, snapshot))
        cid = f"c{self._next_commit:06d}"
        self._next_commit += 1
        self.commits[cid] = Commit(cid, parents, snapshot, message, author, adds, dels)
        return cid

    # --- backend contract -------------------------------------------------

    def create_branch(self, name: str, at: str) -> None:
        if name in self.branches:
            raise BranchExists(f"branch '{name}' already exists")
        self._require_commit(at)
        self.branches[name] = at

    def resolve(self, branch: str) -> str:
        try:
            return self.branches[branch]
        except KeyError:
            raise BranchMissing(f"no branch named '{branch}'") from None

    def branch_names(self) -> list[str]:
        return sorted(self.branches)

    def set_branch(self, name: str, commit_id: str) -> None:
        self._require_commit(commit_id)
        if name not in self.branches:
            raise BranchMissing(f"no branch named '{name}'")
        self.branches[name] = commit_id

    def commit_snapshot(
        self, branch: str, snapshot: Snapshot, message: str, author: str,
        extra_parents: tuple[str, ...] = (),
    ) -> str:
        head = self.resolve(branch)
        cid = self._new_commit((head, *extra_parents), snapshot, message, author)
        self.branches[branch] = cid
        return cid

    def snapshot_of(self, commit_id: str) -> Snapshot:
        return {p: list(ls) for p, ls in self._require_commit(commit_id).snapshot.items()}

    def parents_of(self, commit_id: str) -> tuple[str, ...]:
        return self._require_commit(commit_id).parents

    def change_counts(self, commit_id: str) -> tuple[int, int]:
        commit = self._require_commit(commit_id)
        return commit.additions, commit.deletions

    def merge_base(self, a: str, b: str) -> str:
        """Deepest common ancestor of a and b; depth ties go to the
        smallest commit id so diffs reproduce across implementations."""
        common = self.ancestor_set(a) & self.ancestor_set(b)
        if not common:
            raise NoCommonAncestor(f"{a} and {b} share no history")
        depths = self._depths(common)
        return min(common, key=lambda c: (-depths[c], c))

    # --- graph helpers ----------------------------------------------------

    def _require_commit(self, commit_id: str) -> Commit:
        try:
            return self.commits[commit_id]
        except KeyError:
            raise UnknownCommit(f"no commit '{commit_id}'") from None

    def ancestor_set(self, commit_id: str) -> set[str]:
        """All ancestors of a commit, the commit itself included."""
        self._require_commit(commit_id)
        seen: set[str] = set()
        stack = [commit_id]
        while stack:
            cid = stack.pop()
            if cid in seen:
                continue
            seen.add(cid)
            stack.extend(self.commits[cid].parents)
        return seen

    def is_ancestor(self, ancestor: str, descendant: str) -> bool:
        return ancestor in self.ancestor_set(descendant)

    def _depths(self, of: set[str]) -> dict[str, int]:
        """Longest root-to-commit path length, for the requested commits."""
        memo: dict[str, int] = {}

        def depth(cid: str) -> int:
            if cid in memo:
                return memo[cid]
            # iterative post-order to dodge recursion limits on long chains
            stack = [(cid, False)]
            while stack:
                cur, ready = stack.pop()
                if cur in memo:
                    continue
                parents = self.commits[cur].parents
                if ready or not parents:
                    memo[cur] = 1 + max(
                        (memo[p] for p in parents), default=-1,
                    )
                else:
                    stack.append((cur, True))
                    stack.extend((p, False) for p in parents if p not in memo)
            return memo[cid]

        return {cid: depth(cid) for cid in of}

    def changed_paths(self, commit_id: str) -> list[str]:
        """Paths touched by a commit relative to its first parent."""
        commit = self._require_commit(commit_id)
        base: Snapshot = (
            self.commits[commit.parents[0]].snapshot if commit.parents else {}
        )
        return [fd.path for fd in diffs.compute_diff(base, commit.snapshot)]

    def head_snapshot(self, branch: str) -> Snapshot:
        return self.snapshot_of(self.resolve(branch))

    # --- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "next_commit": self._next_commit,
            "branches": dict(sorted(self.branches.items())),
            "commits": {
                cid: {
                    "parents": list(c.parents),
                    "snapshot": {p: list(ls) for p, ls in sorted(c.snapshot.items())},
                    "message": c.message,
                    "author": c.author,
                    "additions": c.additions,
                    "deletions": c.deletions,
                }
                for cid, c in sorted(self.commits.items())
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VcsModel":
        vcs = cls()
        vcs._next_commit = data["next_commit"]
        vcs.branches = dict(data["branches"])
        for cid, raw in data["commits"].items():
            vcs.commits[cid] = Commit(
                id=cid,
                parents=tuple(raw["parents"]),
                snapshot={p: list(ls) for p, ls in raw["snapshot"].items()},
                message=raw["message"],
                author=raw["author"],
                additions=raw["additions"],
                deletions=raw["deletions"],
            )
        return vcs
