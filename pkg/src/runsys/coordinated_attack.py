"""Two generals, one messenger.

General A is agent 1, general B is agent 2. A transit takes one round: a
message sent during round ``m`` either reaches the other general at time
``m`` or is lost, as the environment chooses. Transit ``1`` is A's
"attack at dawn"; transit ``j > 1`` acknowledges transit ``j - 1``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

from .core import Event, GlobalState, LocalState, Point, System
from .engine import Action, Context, JointProtocol, Protocol, check_umd_witnesses, generate_system
from .epistemics import AgentGroup, common_knowledge, knowledge_depth
from .errors import ConfigurationError
from .verdict import Verdict

A, B = 1, 2
GENERALS = AgentGroup.of([A, B], name="A,B")
NAMES = {A: "A", B: "B"}

DELIVER = Action("deliver")
LOSE = Action("lose")
IDLE = Action("idle")


@dataclass(frozen=True)
class MessengerScenario:
    max_transits: int = 4
    horizon: int = 6
    payoffs: tuple | None = None
    reliable: bool = False
    plan_uncertain: bool = True

    def __post_init__(self):
        if self.max_transits < 0:
            raise ConfigurationError("max_transits must be non-negative")
        if self.horizon < max(1, self.max_transits):
            raise ConfigurationError("horizon must be at least max_transits (and at least 1)")
        if self.payoffs is not None:
            low, mid, high = self.payoffs
            if not low < mid < high:
                raise ConfigurationError("payoffs must satisfy L < M < H")


def delivery_patterns(sc: MessengerScenario) -> list[tuple]:
    """Every delivered/lost assignment to the scenario's transits, ignoring the protocol."""
    return list(itertools.product(("delivered", "lost"), repeat=sc.max_transits))


def _general(name: str, **extra) -> LocalState:
    return LocalState(name=name, round=0, sent=(), received=(), attacking=False, **extra)


def build_messenger_context(sc: MessengerScenario) -> Context:
    def env_policy(env):
        if env["attempted"] >= sc.max_transits:
            return (IDLE,)
        return (DELIVER,) if sc.reliable else (DELIVER, LOSE)

    def transition(g, ja):
        env = g.env
        attempted, pattern = env["attempted"], env["pattern"]
        locals_ = [dict(s) for s in g.locals]
        for i, act in enumerate(ja.agents):
            me = locals_[i]
            if act.label != "send":
                if act.payload:
                    me["attacking"] = True
                continue
            msg, attack = act.payload
            me["sent"] = me["sent"] + (msg,)
            if attack:
                me["attacking"] = True
            if attempted >= sc.max_transits:
                continue
            attempted += 1
            if ja.env == DELIVER:
                other = locals_[1 - i]
                other["received"] = other["received"] + (msg,)
                pattern += ("delivered",)
            else:
                pattern += ("lost",)
        for me in locals_:
            me["round"] += 1
        new_env = LocalState(round=env["round"] + 1, attempted=attempted, pattern=pattern)
        return GlobalState(new_env, tuple(LocalState(me) for me in locals_))

    def receives(prev, nxt, agent):
        return len(nxt.locals[agent - 1]["received"]) > len(prev.locals[agent - 1]["received"])

    g0_env = LocalState(round=0, attempted=0, pattern=())
    # Only A knows whether it plans to attack; without this, "A sent" would be
    # common knowledge from round 1 on.
    plans = (True, False) if sc.plan_uncertain else (True,)
    initial = [GlobalState(g0_env, (_general("A", plan=plan), _general("B"))) for plan in plans]
    return Context(
        env_protocol=Protocol(env_policy, "reliable" if sc.reliable else "lossy", nondeterministic=True),
        initial_states=initial,
        transition=transition,
        receives=receives,
        name="messenger",
        info={"scenario": sc},
    )


# Attack rules: (general, local state) -> attack now?
def _never(agent: int, s: LocalState) -> bool:
    return False


def _after_exchange(agent: int, s: LocalState) -> bool:
    if agent == A:
        return 1 in s["sent"]
    return 1 in s["received"]


def _one_sided(agent: int, s: LocalState) -> bool:
    return agent == A and 1 in s["sent"]


ATTACK_RULES: dict[str, Callable[[int, LocalState], bool]] = {
    "never": _never,
    "after-exchange": _after_exchange,
    "one-sided": _one_sided,
}


def acknowledgment_protocol(k: int, attack_rule: str | Callable = "never") -> JointProtocol:
    """A sends transit 1 if it plans to attack; each delivered transit ``j < k`` is answered with ``j + 1``."""
    if k < 0:
        raise ConfigurationError("k must be non-negative")
    rule = ATTACK_RULES[attack_rule] if isinstance(attack_rule, str) else attack_rule

    def policy_for(agent):
        def policy(s):
            due = None
            if agent == A and s["round"] == 0 and k >= 1 and s["plan"]:
                due = 1
            for j in s["received"]:
                if j + 1 <= k and j + 1 not in s["sent"]:
                    due = j + 1
            attack = bool(rule(agent, s))
            if due is not None:
                return Action("send", (due, attack))
            return Action("wait", attack)
        return Protocol(policy, f"ack{k}-{NAMES[agent]}")

    return JointProtocol((policy_for(A), policy_for(B)), name=f"ack({k})")


def messenger_system(sc: MessengerScenario, k: int | None = None, attack_rule="never",
                     budget: int = 10**6, workers: int = 1) -> System:
    k = sc.max_transits if k is None else k
    return generate_system(build_messenger_context(sc), acknowledgment_protocol(k, attack_rule),
                           sc.horizon, budget=budget, workers=workers)


def sent_event(sys: System) -> Event:
    """A has sent the "attack at dawn" message."""
    return sys.event("sent", lambda s, p: 1 in s.local(p, A)["sent"])


def delivered_event(sys: System) -> Event:
    return sys.event("delivered", lambda s, p: any(s.local(p, a)["received"] for a in (A, B)))


def attacks_event(sys: System, agent: int) -> Event:
    return sys.event(f"{NAMES[agent]}-attacks", lambda s, p: s.local(p, agent)["attacking"])


def attack_event(sys: System) -> Event:
    return (attacks_event(sys, A) & attacks_event(sys, B)).named("attack")


def _witnesses(sys: System, points) -> list[dict]:
    out = []
    for p in points:
        final = sys.runs[p.run].states[-1]
        out.append({"point": p.label(), "plan": final.locals[0]["plan"] if "plan" in final.locals[0] else True,
                    "pattern": list(final.env["pattern"])})
    return out


def verify_no_ck_delivery(sys: System) -> Verdict:
    ck = common_knowledge(sys, GENERALS, delivered_event(sys))
    return Verdict("no-ck-delivery", ck.is_empty(), {"ck_points": len(ck)}, _witnesses(sys, ck.points()))


def verify_attack_requires_ck(sys: System, attack: Event | None = None) -> Verdict:
    """Check attack is contained in common knowledge of attack.

    A point where exactly one general attacks means the protocol is not a
    coordinated-attack protocol; that is reported as a protocol violation.
    """
    one_sided = attacks_event(sys, A).bits ^ attacks_event(sys, B).bits
    if one_sided:
        witnesses = _witnesses(sys, Event(sys, one_sided).points())
        return Verdict("attack-requires-ck", False, {"protocol_violation": True}, witnesses)
    attack = attack_event(sys) if attack is None else attack
    ck = common_knowledge(sys, GENERALS, attack)
    bad = attack - ck
    return Verdict("attack-requires-ck", bad.is_empty(),
                   {"protocol_violation": False, "attack_points": len(attack)}, _witnesses(sys, bad.points()))


def verify_no_coordination(sys: System, ctx: Context) -> Verdict:
    """Under umd, a coordinated-attack protocol never attacks (finite check)."""
    umd = check_umd_witnesses(sys, ctx)
    coordinated = verify_attack_requires_ck(sys)
    attack = attack_event(sys)
    detail = {"umd": umd.passed, "coordinated": coordinated.passed, "attack_points": len(attack)}
    applies = umd.passed and coordinated.passed
    return Verdict("no-coordinated-attack", not applies or attack.is_empty(), detail,
                   _witnesses(sys, attack.points()) if applies else [])


def all_delivered_run(sys: System) -> int:
    best, best_count = 0, -1
    for ri, r in enumerate(sys.runs):
        pattern = r.states[-1].env["pattern"]
        if "lost" not in pattern and len(pattern) > best_count:
            best, best_count = ri, len(pattern)
    return best


def depth_on_all_delivered(sys: System, max_k: int) -> int:
    p = Point(all_delivered_run(sys), sys.horizon)
    return knowledge_depth(sys, GENERALS, sent_event(sys), p, max_k)


def payoff_annotations(sys: System, payoffs: tuple) -> list[dict]:
    low, mid, high = payoffs
    out = []
    for ri, r in enumerate(sys.runs):
        final = r.states[-1]
        a, b = (final.locals[i]["attacking"] for i in (0, 1))
        value = high if a and b else mid if not a and not b else low
        out.append({"run": ri, "pattern": list(final.env["pattern"]), "payoff": value})
    return out
