"""Runs, points and knowledge for finite multi-agent systems."""
from .core import Event, GlobalState, LocalState, Point, Run, System, event_holds, indistinguishable, information_set, to_dot
from .engine import Action, Context, JointAction, JointProtocol, Protocol, generate_system, is_consistent, replay
from .epistemics import (AgentGroup, common_knowledge, everyone_knows, iterated_everyone_knows, knowledge_depth,
                         knows, nonfaulty_common_knowledge)
from .errors import (ConfigurationError, DomainError, InternalError, ModelError, RangeError, ResourceError,
                     RunsysError)
from .verdict import Verdict

__version__ = "0.1.0"

__all__ = [
    "Action", "AgentGroup", "ConfigurationError", "Context", "DomainError", "Event", "GlobalState",
    "InternalError", "JointAction", "JointProtocol", "LocalState", "ModelError", "Point", "Protocol",
    "RangeError", "ResourceError", "Run", "RunsysError", "System", "Verdict", "common_knowledge",
    "event_holds", "everyone_knows", "generate_system", "indistinguishable", "information_set",
    "is_consistent", "iterated_everyone_knows", "knowledge_depth", "knows", "nonfaulty_common_knowledge",
    "replay", "to_dot",
]
