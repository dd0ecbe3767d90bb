"""Knowledge operators over a finite system.

Everything works on :class:`~runsys.core.Event` bitsets. ``knows`` is the
union of the agent's cells contained in the event; common knowledge is a
greatest fixpoint of everyone-knows, which also covers groups whose
membership changes from point to point.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .core import Event, Point, System
from .errors import ConfigurationError


@dataclass(frozen=True)
class AgentGroup:
    """A fixed set of agents, or an indexical one decided per point."""

    fixed: frozenset | None = None
    member: Callable[[System, Point, int], bool] | None = None
    name: str = "G"

    def __post_init__(self):
        if (self.fixed is None) == (self.member is None):
            raise ConfigurationError("a group is either fixed or indexical")
        if self.fixed is not None:
            if not self.fixed:
                raise ConfigurationError("fixed groups must be non-empty")
            object.__setattr__(self, "fixed", frozenset(self.fixed))

    @classmethod
    def of(cls, agents: Iterable[int], name: str | None = None) -> "AgentGroup":
        agents = frozenset(agents)
        return cls(fixed=agents, name=name or ",".join(map(str, sorted(agents))))

    @classmethod
    def indexical(cls, member: Callable[[System, Point, int], bool], name: str = "indexical") -> "AgentGroup":
        return cls(member=member, name=name)

    def membership_masks(self, sys: System) -> dict[int, int]:
        """Per agent, the bitset of points at which it belongs to the group."""
        if self.fixed is not None:
            for a in self.fixed:
                sys.check_agent(a)
            return {a: sys.full for a in sorted(self.fixed)}
        masks = {}
        for a in sys.agents():
            bits = 0
            for idx in range(sys.num_points):
                if self.member(sys, sys.point(idx), a):
                    bits |= 1 << idx
            masks[a] = bits
        return masks


def _knows_bits(sys: System, agent: int, bits: int) -> int:
    _, cells = sys.partition(agent)
    out = 0
    for cell in cells:
        if cell & ~bits == 0:
            out |= cell
    return out


def knows(sys: System, agent: int, e: Event) -> Event:
    return Event(sys, _knows_bits(sys, agent, e.bits), f"K{agent}({e.name})")


def _everyone_bits(sys: System, masks: dict[int, int], bits: int) -> int:
    out = sys.full
    for agent, member in masks.items():
        # Outside its membership mask an agent imposes no constraint.
        out &= _knows_bits(sys, agent, bits) | (sys.full & ~member)
    return out


def everyone_knows(sys: System, g: AgentGroup, e: Event) -> Event:
    bits = _everyone_bits(sys, g.membership_masks(sys), e.bits)
    return Event(sys, bits, f"E[{g.name}]({e.name})")


def iterated_everyone_knows(sys: System, g: AgentGroup, e: Event, k: int) -> Event:
    """``k``-fold everyone-knows; ``k == 0`` returns ``e`` itself."""
    masks = g.membership_masks(sys)
    bits = e.bits
    for _ in range(k):
        bits = _everyone_bits(sys, masks, bits)
    return Event(sys, bits, f"E[{g.name}]^{k}({e.name})")


def common_knowledge(sys: System, g: AgentGroup, e: Event) -> Event:
    """Largest X with X = E_G(e & X), by downward iteration from all points."""
    masks = g.membership_masks(sys)
    x = sys.full
    while True:
        nxt = _everyone_bits(sys, masks, e.bits & x)
        if nxt == x:
            break
        x = nxt
    return Event(sys, x, f"C[{g.name}]({e.name})")


def knowledge_depth(sys: System, g: AgentGroup, e: Event, p: Point, max_k: int) -> int:
    """Largest ``k <= max_k`` such that ``E_G^k(e)`` holds at ``p``; -1 if ``e`` fails there."""
    if max_k < 0:
        raise ValueError("max_k must be non-negative")
    idx = sys.index(p)
    bits = e.bits
    if not bits >> idx & 1:
        return -1
    masks = g.membership_masks(sys)
    depth = 0
    while depth < max_k:
        bits = _everyone_bits(sys, masks, bits)
        if not bits >> idx & 1:
            break
        depth += 1
    return depth


def fault_flags(sys: System, p: Point) -> frozenset:
    """Faulty agents recorded in the environment state at ``p``."""
    env = sys.env(p)
    try:
        return frozenset(env["faulty"])
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"environment state at {tuple(p)} carries no fault flags") from exc


def nonfaulty_group(sys: System) -> AgentGroup:
    # Validate up front so a missing flag surfaces as a configuration error.
    for p in sys.points():
        fault_flags(sys, p)
    return AgentGroup.indexical(lambda s, p, a: a not in fault_flags(s, p), name="N")


def nonfaulty_common_knowledge(sys: System, e: Event) -> Event:
    return common_knowledge(sys, nonfaulty_group(sys), e).named(f"CN({e.name})")
