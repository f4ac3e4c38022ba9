"""Pull-request based inspection workflow engine for course projects.

Library layout:

- ``workflow``: the pure inspection-lifecycle state machine
- ``vcs`` / ``topology``: in-memory repository model and branch mechanics
- ``diffs`` / ``anchors``: line diffs, comment anchoring, re-anchoring
- ``forge``: pull requests, reviews, notifications, milestones
- ``plantuml`` / ``artifacts`` / ``commitlint``: artifact quality tooling
- ``project`` / ``cli``: durable state and the command-line front end
"""

from .errors import PblError
from .workflow import (
    ArtifactKind,
    ArtifactRecord,
    InspectionPhase,
    Verdict,
    WorkflowEvent,
    advance,
    can_merge_to_master,
    request_round,
)

__version__ = "0.1.0"

__all__ = [
    "ArtifactKind",
    "ArtifactRecord",
    "InspectionPhase",
    "PblError",
    "Verdict",
    "WorkflowEvent",
    "advance",
    "can_merge_to_master",
    "request_round",
    "__version__",
]
