"""pocketflow: a portable workflow client.

Discover workflows from a repository service, execute them on a remote
execution service, monitor runs (including externally started ones), and keep
favourites plus previous inputs on disk for one-command reruns. Ships with
in-process mocks of both services so everything is testable offline.
"""

__version__ = "0.1.0"

from pocketflow.model import (  # noqa: F401
    InputBinding,
    OutputArtifact,
    OutputManifest,
    PortSpec,
    RunDescriptor,
    RunEvent,
    RunState,
    WorkflowFormat,
    WorkflowMetadata,
    WorkflowRef,
    transition,
    validate_bindings,
)
