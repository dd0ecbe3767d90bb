"""Runs, points, systems and events.

A system is a finite set of runs sharing one horizon. Every point ``(run, time)``
gets a slot in a flat point table so that events can be stored as integer
bitsets; knowledge operators in :mod:`runsys.epistemics` work on those bitsets.
"""
from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, NamedTuple, Sequence

from .errors import DomainError, RangeError


class LocalState(Mapping):
    """Immutable mapping of labeled atoms.

    Values must be hashable; nest ``LocalState`` instances or tuples to build
    trees. Equality and hashing are structural.
    """

    __slots__ = ("_items", "_hash")

    def __init__(self, items: Mapping | Iterable = (), **atoms: Any):
        data = dict(items)
        data.update(atoms)
        self._items = tuple(sorted(data.items()))
        self._hash = hash(self._items)

    def __getitem__(self, key):
        for k, v in self._items:
            if k == key:
                return v
        raise KeyError(key)

    def __iter__(self):
        return (k for k, _ in self._items)

    def __len__(self):
        return len(self._items)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if isinstance(other, LocalState):
            return self._hash == other._hash and self._items == other._items
        return NotImplemented

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self._items)
        return f"LocalState({inner})"

    def replace(self, **atoms: Any) -> "LocalState":
        return LocalState(self._items, **atoms)


@dataclass(frozen=True)
class GlobalState:
    env: Any
    locals: tuple

    def __post_init__(self):
        if not isinstance(self.locals, tuple):
            object.__setattr__(self, "locals", tuple(self.locals))

    @property
    def n(self) -> int:
        return len(self.locals)

    def local(self, agent: int):
        if not 1 <= agent <= len(self.locals):
            raise RangeError(f"agent {agent} not in 1..{len(self.locals)}")
        return self.locals[agent - 1]


@dataclass(frozen=True)
class Run:
    """A finite run; ``witness`` records how it was produced and is ignored by equality."""

    states: tuple
    witness: Any = field(default=None, compare=False)

    def __post_init__(self):
        if not isinstance(self.states, tuple):
            object.__setattr__(self, "states", tuple(self.states))
        if not self.states:
            raise ValueError("a run needs at least one global state")
        n = self.states[0].n
        if any(g.n != n for g in self.states):
            raise ValueError("all global states of a run must have the same agent count")

    @property
    def horizon(self) -> int:
        return len(self.states) - 1

    def __call__(self, time: int) -> GlobalState:
        return self.states[time]


class Point(NamedTuple):
    run: int
    time: int

    def label(self) -> str:
        return f"{self.run}/{self.time}"


def local_state_at(run: Run, agent: int, time: int):
    """Agent ``agent``'s component of ``run`` at ``time`` (agents are 1-based)."""
    if not 0 <= time <= run.horizon:
        raise RangeError(f"time {time} not in 0..{run.horizon}")
    return run.states[time].local(agent)


class System:
    """A finite, horizon-bounded set of runs.

    Duplicate runs are collapsed on construction, keeping the first
    occurrence, so run indices follow insertion order.
    """

    def __init__(self, runs: Iterable[Run], horizon: int | None = None, n: int | None = None):
        unique: dict[tuple, Run] = {}
        for r in runs:
            unique.setdefault(r.states, r)
        self.runs: tuple[Run, ...] = tuple(unique.values())
        if not self.runs:
            raise ValueError("a system needs at least one run")
        self.horizon = self.runs[0].horizon if horizon is None else horizon
        self.n = self.runs[0].states[0].n if n is None else n
        for r in self.runs:
            if r.horizon != self.horizon:
                raise ValueError(f"run of horizon {r.horizon} in a system of horizon {self.horizon}")
            if r.states[0].n != self.n:
                raise ValueError("agent count mismatch")
        self.width = self.horizon + 1
        self.num_points = len(self.runs) * self.width
        self.full = (1 << self.num_points) - 1
        self._partitions: dict[int, tuple[list[int], list[int]]] = {}

    def __len__(self):
        return len(self.runs)

    def __repr__(self):
        return f"System(runs={len(self.runs)}, horizon={self.horizon}, n={self.n})"

    def agents(self) -> range:
        return range(1, self.n + 1)

    def index(self, p: Point) -> int:
        self.check_point(p)
        return p[0] * self.width + p[1]

    def point(self, index: int) -> Point:
        return Point(*divmod(index, self.width))

    def points(self) -> Iterator[Point]:
        for r in range(len(self.runs)):
            for m in range(self.width):
                yield Point(r, m)

    def check_point(self, p) -> None:
        if not (isinstance(p, tuple) and len(p) == 2):
            raise DomainError(f"{p!r} is not a point")
        run, time = p
        if not 0 <= run < len(self.runs) or not 0 <= time <= self.horizon:
            raise DomainError(f"point {tuple(p)} does not belong to {self!r}")

    def check_agent(self, agent: int) -> None:
        if not 1 <= agent <= self.n:
            raise RangeError(f"agent {agent} not in 1..{self.n}")

    def global_state(self, p: Point) -> GlobalState:
        self.check_point(p)
        return self.runs[p[0]].states[p[1]]

    def local(self, p: Point, agent: int):
        self.check_agent(agent)
        return self.global_state(p).locals[agent - 1]

    def env(self, p: Point):
        return self.global_state(p).env

    def partition(self, agent: int) -> tuple[list[int], list[int]]:
        """``(cell_of, cells)``: cell id per point index and each cell as a bitmask."""
        self.check_agent(agent)
        cached = self._partitions.get(agent)
        if cached is not None:
            return cached
        ids: dict[Any, int] = {}
        cell_of: list[int] = []
        cells: list[int] = []
        for idx in range(self.num_points):
            r, m = divmod(idx, self.width)
            key = self.runs[r].states[m].locals[agent - 1]
            c = ids.get(key)
            if c is None:
                c = ids[key] = len(cells)
                cells.append(0)
            cells[c] |= 1 << idx
            cell_of.append(c)
        result = (cell_of, cells)
        self._partitions[agent] = result
        return result

    def event(self, name: str, pred: Callable[["System", Point], bool]) -> "Event":
        return Event.from_predicate(self, name, pred)

    def everything(self, name: str = "true") -> "Event":
        return Event(self, self.full, name)

    def nothing(self, name: str = "false") -> "Event":
        return Event(self, 0, name)

    def at_time(self, time: int) -> "Event":
        if not 0 <= time <= self.horizon:
            raise RangeError(f"time {time} not in 0..{self.horizon}")
        mask = 0
        for r in range(len(self.runs)):
            mask |= 1 << (r * self.width + time)
        return Event(self, mask, f"time={time}")


class Event:
    """A set of points of one system, stored as a bitset over the point table."""

    __slots__ = ("system", "bits", "name")

    def __init__(self, system: System, bits: int, name: str = "?"):
        self.system = system
        self.bits = bits & system.full
        self.name = name

    @classmethod
    def from_predicate(cls, system: System, name: str, pred: Callable[[System, Point], bool]) -> "Event":
        bits = 0
        for idx in range(system.num_points):
            if pred(system, system.point(idx)):
                bits |= 1 << idx
        return cls(system, bits, name)

    @classmethod
    def from_points(cls, system: System, points: Iterable[Point], name: str = "?") -> "Event":
        bits = 0
        for p in points:
            bits |= 1 << system.index(p)
        return cls(system, bits, name)

    def _other(self, other: "Event") -> int:
        if other.system is not self.system:
            raise DomainError("events belong to different systems")
        return other.bits

    def __and__(self, other):
        return Event(self.system, self.bits & self._other(other), f"({self.name} & {other.name})")

    def __or__(self, other):
        return Event(self.system, self.bits | self._other(other), f"({self.name} | {other.name})")

    def __sub__(self, other):
        return Event(self.system, self.bits & ~self._other(other), f"({self.name} - {other.name})")

    def __invert__(self):
        return Event(self.system, self.system.full & ~self.bits, f"~{self.name}")

    def __le__(self, other):
        return self.bits & ~self._other(other) == 0

    def __eq__(self, other):
        if not isinstance(other, Event):
            return NotImplemented
        return self.system is other.system and self.bits == other.bits

    def __hash__(self):
        return hash((id(self.system), self.bits))

    def __contains__(self, p) -> bool:
        return bool(self.bits >> self.system.index(p) & 1)

    def __len__(self):
        return self.bits.bit_count()

    def __bool__(self):
        return self.bits != 0

    def __repr__(self):
        return f"Event({self.name!r}, {len(self)}/{self.system.num_points} points)"

    def named(self, name: str) -> "Event":
        return Event(self.system, self.bits, name)

    def points(self) -> list[Point]:
        out = []
        bits, idx = self.bits, 0
        while bits:
            if bits & 1:
                out.append(self.system.point(idx))
            bits >>= 1
            idx += 1
        return out

    def is_empty(self) -> bool:
        return self.bits == 0


def indistinguishable(sys: System, p: Point, q: Point, agent: int) -> bool:
    return sys.local(p, agent) == sys.local(q, agent)


def information_set(sys: System, p: Point, agent: int) -> frozenset:
    """All points of ``sys`` that ``agent`` cannot tell apart from ``p``."""
    cell_of, cells = sys.partition(agent)
    return frozenset(Event(sys, cells[cell_of[sys.index(p)]]).points())


def event_holds(sys: System, e: Event, p: Point) -> bool:
    if e.system is not sys:
        raise DomainError(f"event {e.name!r} is not defined on this system")
    return p in e


def to_dot(sys: System, agents: Sequence[int] | None = None, name: str = "system",
           agent_names: Sequence[str] | None = None, time: int | None = None) -> str:
    """Indistinguishability graph in DOT syntax.

    Nodes are points labeled ``run/time`` (runs with a string witness also
    get a readable ``label``); each agent contributes one undirected edge per
    pair of distinct points in the same cell. Reflexive edges are left out.
    ``time`` restricts the graph to one time slice.
    """
    agents = list(sys.agents()) if agents is None else list(agents)
    keep = sys.full if time is None else sys.at_time(time).bits
    lines = [f"graph {name} {{"]
    for p in Event(sys, keep).points():
        witness = sys.runs[p.run].witness
        attr = f' [label="{witness}@{p.time}"]' if isinstance(witness, str) else ""
        lines.append(f'  "{p.label()}"{attr};')
    for agent in agents:
        label = agent_names[agent - 1] if agent_names else str(agent)
        _, cells = sys.partition(agent)
        for cell in cells:
            members = Event(sys, cell & keep).points()
            for i, p in enumerate(members):
                for q in members[i + 1:]:
                    lines.append(f'  "{p.label()}" -- "{q.label()}" [agent="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
