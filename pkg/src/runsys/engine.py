"""Protocols, contexts, and generation of the system a joint protocol represents.

A :class:`Context` bundles a (possibly nondeterministic) environment
protocol, a set of initial global states and a transition function.
:func:`generate_system` enumerates every run consistent with a joint protocol
in that context, branching over the environment's choices.
"""
from __future__ import annotations

import itertools
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

from .core import GlobalState, Run, System
from .errors import ConfigurationError, InternalError, ResourceError
from .verdict import Verdict

DEFAULT_BUDGET = 10**6


@dataclass(frozen=True)
class Action:
    label: str
    payload: Any = None


NOOP = Action("noop")


@dataclass(frozen=True)
class JointAction:
    env: Action
    agents: tuple

    def __post_init__(self):
        if not isinstance(self.agents, tuple):
            object.__setattr__(self, "agents", tuple(self.agents))


class Protocol:
    """Wraps a policy mapping a local state to an action.

    With ``nondeterministic=True`` the policy returns a sequence of allowed
    actions instead; only environment protocols may do that.
    """

    def __init__(self, policy: Callable[[Any], Any], name: str = "protocol",
                 nondeterministic: bool = False):
        self.policy = policy
        self.name = name
        self.nondeterministic = nondeterministic

    def __call__(self, state):
        return self.policy(state)

    def __repr__(self):
        return f"Protocol({self.name!r})"

    def actions(self, state) -> tuple:
        out = self.policy(state)
        if self.nondeterministic:
            return tuple(out)
        return (out,)


@dataclass
class JointProtocol:
    protocols: tuple
    name: str = "joint"

    def __post_init__(self):
        self.protocols = tuple(self.protocols)
        for p in self.protocols:
            if p.nondeterministic:
                raise ConfigurationError(f"agent protocol {p.name!r} must be deterministic")

    @property
    def n(self) -> int:
        return len(self.protocols)


def _default_receives(prev: GlobalState, nxt: GlobalState, agent: int) -> bool:
    # Convention for contexts without a hook: an agent receives when its
    # "received" log grows.
    before = prev.locals[agent - 1]
    after = nxt.locals[agent - 1]
    try:
        return len(after["received"]) > len(before["received"])
    except (KeyError, TypeError):
        return False


@dataclass
class Context:
    """Environment protocol, initial global states and transition function.

    ``transition(g, ja)`` returns the successor of ``g`` under joint action
    ``ja``. ``receives(prev, next, agent)`` reports whether ``agent`` got a
    message on that step; it is only needed for the umd check.

    When ``synchronous`` is false, every joint action also fixes which agents
    move: ``ja.env`` becomes ``Action("schedule", (movers, inner_env_action))``
    and non-movers perform :data:`NOOP`.
    """

    env_protocol: Protocol
    initial_states: Sequence[GlobalState]
    transition: Callable[[GlobalState, JointAction], GlobalState]
    receives: Callable[[GlobalState, GlobalState, int], bool] = _default_receives
    synchronous: bool = True
    name: str = "context"
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.initial_states = tuple(self.initial_states)
        if not self.initial_states:
            raise ConfigurationError("a context needs at least one initial global state")


def select_joint_actions(ctx: Context, jp: JointProtocol, g: GlobalState) -> tuple:
    if g.n != jp.n:
        raise ConfigurationError(f"global state has {g.n} agents, joint protocol has {jp.n}")
    agent_actions = []
    for i, (proto, local) in enumerate(zip(jp.protocols, g.locals), start=1):
        try:
            act = proto(local)
        except Exception as exc:
            raise ConfigurationError(
                f"protocol {proto.name!r} of agent {i} undefined on local state {local!r}: {exc}"
            ) from exc
        if act is None:
            raise ConfigurationError(f"protocol {proto.name!r} of agent {i} undefined on local state {local!r}")
        agent_actions.append(act)
    env_actions = ctx.env_protocol.actions(g.env)
    if not env_actions:
        raise ConfigurationError(f"environment protocol offers no action at {g.env!r}")
    if ctx.synchronous:
        return tuple(JointAction(e, agent_actions) for e in env_actions)
    out = []
    agents = range(1, g.n + 1)
    for size in range(1, g.n + 1):
        for movers in itertools.combinations(agents, size):
            acts = tuple(a if i in movers else NOOP for i, a in enumerate(agent_actions, start=1))
            for e in env_actions:
                out.append(JointAction(Action("schedule", (frozenset(movers), e)), acts))
    return tuple(out)


def step(ctx: Context, g: GlobalState, ja: JointAction) -> GlobalState:
    try:
        return ctx.transition(g, ja)
    except Exception as exc:
        raise InternalError(f"transition undefined for {ja!r} at {g!r}: {exc}") from exc


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.count = 0
        self._lock = threading.Lock()

    def spend(self, k: int = 1):
        with self._lock:
            self.count += k
            if self.count > self.limit:
                raise ResourceError("state budget exceeded", self.count)


def _runs_from(ctx: Context, jp: JointProtocol, g0: GlobalState, horizon: int, budget: _Budget) -> list[Run]:
    runs: list[Run] = []
    budget.spend()
    stack = [((g0,), ())]
    while stack:
        states, choices = stack.pop()
        if len(states) == horizon + 1:
            runs.append(Run(states, witness=choices))
            continue
        g = states[-1]
        successors: dict[GlobalState, Action] = {}
        for ja in select_joint_actions(ctx, jp, g):
            nxt = step(ctx, g, ja)
            successors.setdefault(nxt, ja.env)
        budget.spend(len(successors))
        # Reversed push keeps depth-first order aligned with the environment's choice order.
        for nxt, env_act in reversed(list(successors.items())):
            stack.append((states + (nxt,), choices + (env_act,)))
    return runs


def generate_system(ctx: Context, jp: JointProtocol, horizon: int,
                    budget: int = DEFAULT_BUDGET, workers: int = 1) -> System:
    """All runs consistent with ``jp`` in ``ctx`` up to ``horizon``.

    Each run's ``witness`` is the tuple of environment actions that produced
    it. Work fans out over initial states; the merged result does not depend
    on ``workers``.
    """
    if horizon < 1:
        raise ConfigurationError("horizon must be at least 1")
    tracker = _Budget(budget)
    starts = ctx.initial_states
    if workers <= 1 or len(starts) == 1:
        chunks = [_runs_from(ctx, jp, g0, horizon, tracker) for g0 in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda g0: _runs_from(ctx, jp, g0, horizon, tracker), starts))
    return System(itertools.chain.from_iterable(chunks), horizon=horizon, n=jp.n)


def replay(ctx: Context, jp: JointProtocol, g0: GlobalState, env_choices: Iterable[Action]) -> Run:
    """Rebuild a single run from its initial state and environment choices."""
    states = [g0]
    choices = tuple(env_choices)
    for env_act in choices:
        g = states[-1]
        matches = [ja for ja in select_joint_actions(ctx, jp, g) if ja.env == env_act]
        if not matches:
            raise ConfigurationError(f"environment action {env_act!r} not allowed at {g.env!r}")
        states.append(step(ctx, g, matches[0]))
    return Run(tuple(states), witness=choices)


def is_consistent(ctx: Context, jp: JointProtocol, run: Run) -> bool:
    """True iff every transition of ``run`` is justified by some joint action."""
    if run.states[0] not in ctx.initial_states:
        return False
    for g, nxt in zip(run.states, run.states[1:]):
        if not any(step(ctx, g, ja) == nxt for ja in select_joint_actions(ctx, jp, g)):
            return False
    return True


def check_umd_witnesses(sys: System, ctx: Context) -> Verdict:
    """Finite-horizon check that the context can delay any receipt unnoticed.

    For each receipt by agent ``i`` at time ``m`` in run ``r`` and each
    ``m'`` from ``m`` up to (but excluding) the next receipt by another agent
    in ``r`` (or the horizon), looks for a run ``r'`` equal to ``r`` before
    ``m`` in which ``i`` receives nothing during ``[m, m']`` while every other
    agent's local states match ``r`` through ``m'``.
    """
    H = sys.horizon
    runs = sys.runs
    n = sys.n
    recv = [[[False] * (H + 1) for _ in range(n + 1)] for _ in runs]
    for ri, r in enumerate(runs):
        for m in range(1, H + 1):
            for i in range(1, n + 1):
                recv[ri][i][m] = bool(ctx.receives(r.states[m - 1], r.states[m], i))
    missing = []
    checked = 0
    for ri, r in enumerate(runs):
        for i in range(1, n + 1):
            for m in range(1, H + 1):
                if not recv[ri][i][m]:
                    continue
                limit = H
                for k in range(m + 1, H + 1):
                    if any(recv[ri][j][k] for j in range(1, n + 1) if j != i):
                        limit = k - 1
                        break
                for m2 in range(m, limit + 1):
                    checked += 1
                    if not _has_delay_witness(sys, recv, ri, i, m, m2):
                        missing.append({"run": ri, "agent": i, "received_at": m, "delayed_through": m2})
    return Verdict("umd", not missing, {"receipts_checked": checked, "missing": len(missing)}, missing)


def _has_delay_witness(sys: System, recv, ri: int, i: int, m: int, m2: int) -> bool:
    r = sys.runs[ri]
    for rj, other in enumerate(sys.runs):
        if rj == ri:
            continue
        if other.states[:m] != r.states[:m]:
            continue
        if any(recv[rj][i][k] for k in range(m, m2 + 1)):
            continue
        if all(
            other.states[k].locals[j] == r.states[k].locals[j]
            for k in range(m2 + 1)
            for j in range(sys.n)
            if j != i - 1
        ):
            return True
    return False
