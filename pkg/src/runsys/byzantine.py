"""Synchronous agreement under crash, omission and Byzantine failures.

Agents run the full-information protocol: round 1 broadcasts the initial
preference, rounds 2..t+1 relay every claim heard in the previous round, and
at the end of round t+1 an agent attacks iff some claim chain reports an
initial preference to attack.

The adversary designates the faulty agents in the initial global state; the
environment then branches, round by round, over what those agents do.
Each generated run carries its adversary choices as a replayable witness.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable

from .core import Event, GlobalState, LocalState, Point, Run, System
from .engine import NOOP, Action, Context, JointProtocol, Protocol, generate_system, replay
from .epistemics import knows, nonfaulty_common_knowledge
from .errors import ConfigurationError, ResourceError
from .verdict import Verdict

ATTACK, RETREAT = "attack", "retreat"
VALUES = (ATTACK, RETREAT)
# Forged claims draw from a prefix of this alphabet; None leaves the claim out.
CLAIM_ALPHABET = (ATTACK, RETREAT, None)
KINDS = ("crash", "omission", "byzantine")
WITNESS_FORMAT = "runsys-agreement-witness"
WITNESS_VERSION = 1


class ClaimTree:
    """Nested claims stored as a trie over agent sequences.

    A chain ``(i1, ..., ik)`` with value ``v`` reads "ik said at round k that
    ... i1 said at round 1 that its initial preference was v". Chains that
    share a prefix share a node.
    """

    __slots__ = ("value", "children", "_hash")

    def __init__(self, value=None, children=()):
        self.value = value
        self.children = tuple(children)
        self._hash = hash((value, self.children))

    @classmethod
    def from_claims(cls, claims) -> "ClaimTree":
        items = claims.items() if hasattr(claims, "items") else claims
        root: dict = {}
        for chain, value in items:
            chain = tuple(chain)
            if not chain or len(set(chain)) != len(chain):
                raise ValueError(f"invalid claim chain {chain!r}")
            node = root
            for a in chain:
                node = node.setdefault(a, {})
            node[None] = value
        return cls._freeze(root)

    @classmethod
    def _freeze(cls, node: dict) -> "ClaimTree":
        kids = tuple((a, cls._freeze(sub)) for a, sub in sorted((k, v) for k, v in node.items() if k is not None))
        return cls(node.get(None), kids)

    def claims(self, prefix=()) -> dict:
        """Expand to ``{chain: value}``."""
        out = {}
        if prefix and self.value is not None:
            out[prefix] = self.value
        for a, child in self.children:
            out.update(child.claims(prefix + (a,)))
        return out

    def chains_of_length(self, k: int) -> dict:
        return {c: v for c, v in self.claims().items() if len(c) == k}

    def merge(self, other: "ClaimTree") -> "ClaimTree":
        merged = self.claims()
        merged.update(other.claims())
        return ClaimTree.from_claims(merged)

    def node_count(self) -> int:
        return 1 + sum(child.node_count() for _, child in self.children)

    def any_value(self, value) -> bool:
        return self.value == value or any(c.any_value(value) for _, c in self.children)

    def __eq__(self, other):
        return isinstance(other, ClaimTree) and self._hash == other._hash and \
            self.value == other.value and self.children == other.children

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"ClaimTree({self.claims()!r})"

    def to_list(self) -> list:
        return [[list(c), v] for c, v in sorted(self.claims().items())]


EMPTY_TREE = ClaimTree()


def render_claim(chain, value) -> str:
    """English rendering of one chain, innermost claim last."""
    text = f"{chain[0]} said at round 1 that its initial preference was {value}"
    for k, a in enumerate(chain[1:], start=2):
        text = f"{a} said at round {k} that {text}"
    return text


@dataclass(frozen=True)
class FailureModel:
    kind: str
    t: int
    n: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown failure kind {self.kind!r}; expected one of {KINDS}")
        if self.n < 2 or not 0 <= self.t < self.n:
            raise ConfigurationError(f"need n >= 2 and 0 <= t < n, got n={self.n}, t={self.t}")


@dataclass(frozen=True)
class AdversarySchedule:
    """Faulty set plus the adversary's behavior per round.

    ``rounds[k]`` is a tuple of ``(agent, behavior)`` for round ``k + 1``:

    * crash: ``("up",)`` or ``("crash", recipients_still_served)``
    * omission: ``recipients_still_served``
    * byzantine: tuple of ``(recipient, ClaimTree)`` forged messages
    """

    kind: str
    faulty: frozenset
    rounds: tuple

    def to_dict(self) -> dict:
        def enc(beh):
            if self.kind == "crash":
                return [beh[0]] + ([sorted(beh[1])] if beh[0] == "crash" else [])
            if self.kind == "omission":
                return sorted(beh)
            return [[r, tree.to_list()] for r, tree in beh]
        return {
            "kind": self.kind,
            "faulty": sorted(self.faulty),
            "rounds": [[[a, enc(b)] for a, b in rnd] for rnd in self.rounds],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AdversarySchedule":
        kind = d["kind"]

        def dec(beh):
            if kind == "crash":
                return ("up",) if beh[0] == "up" else ("crash", frozenset(beh[1]))
            if kind == "omission":
                return frozenset(beh)
            return tuple((r, ClaimTree.from_claims([(tuple(c), v) for c, v in tree])) for r, tree in beh)
        rounds = tuple(tuple((a, dec(b)) for a, b in rnd) for rnd in d["rounds"])
        return cls(kind, frozenset(d["faulty"]), rounds)

    def describe(self) -> str:
        if not self.faulty:
            return "no faults"
        parts = []
        for k, rnd in enumerate(self.rounds, start=1):
            for a, beh in rnd:
                if self.kind == "crash" and beh[0] == "crash":
                    parts.append(f"{a} crashes r{k} serving {sorted(beh[1])}")
                elif self.kind == "omission":
                    parts.append(f"{a} r{k} serves {sorted(beh)}")
                elif self.kind == "byzantine" and beh:
                    sent = ", ".join(f"to {r}: {tree.to_list()}" for r, tree in beh)
                    parts.append(f"{a} r{k} sends {sent}")
        faulty = ",".join(map(str, sorted(self.faulty)))
        return f"faulty {{{faulty}}}" + (": " + "; ".join(parts) if parts else "")


def _subsets(items) -> list[frozenset]:
    items = sorted(items)
    return [frozenset(c) for k in range(len(items) + 1) for c in itertools.combinations(items, k)]


def forgeries(sender: int, rnd: int, n: int, alphabet_bound: int) -> list[ClaimTree]:
    """Every syntactically valid round-``rnd`` message ``sender`` could send."""
    alphabet = CLAIM_ALPHABET[:alphabet_bound]
    if not alphabet:
        raise ConfigurationError("claim alphabet bound must be at least 1")
    others = [a for a in range(1, n + 1) if a != sender]
    chains = [c + (sender,) for c in itertools.permutations(others, rnd - 1)]
    out = []
    for values in itertools.product(alphabet, repeat=len(chains)):
        out.append(ClaimTree.from_claims([(c, v) for c, v in zip(chains, values) if v is not None]))
    return out


def _crash_options(agent: int, n: int) -> list:
    others = [a for a in range(1, n + 1) if a != agent]
    return [("up",)] + [("crash", s) for s in _subsets(others)]


def _agent_round_options(fm: FailureModel, agent: int, rnd: int, crashed: bool,
                         alphabet_bound: int, active_rounds: int) -> list:
    others = [a for a in range(1, fm.n + 1) if a != agent]
    if fm.kind == "crash":
        return [None] if crashed else _crash_options(agent, fm.n)
    if fm.kind == "omission":
        return _subsets(others)
    if rnd > active_rounds:
        return [()]
    per_recipient = [[(r, f) for f in forgeries(agent, rnd, fm.n, alphabet_bound)] for r in others]
    return [tuple(combo) for combo in itertools.product(*per_recipient)]


def enumerate_schedules(fm: FailureModel, rounds: int, claim_alphabet_bound: int = 2,
                        budget: int = 10**6) -> list[AdversarySchedule]:
    """All adversary schedules over ``rounds`` rounds.

    For crash failures a faulty agent either never crashes or crashes in one
    round, still serving some subset of its recipients.
    """
    if rounds < 1:
        raise ConfigurationError("rounds must be at least 1")
    out: list[AdversarySchedule] = []
    agents = range(1, fm.n + 1)
    for size in range(fm.t + 1):
        for faulty in itertools.combinations(agents, size):
            per_agent = [_whole_run_behaviors(fm, a, rounds, claim_alphabet_bound) for a in faulty]
            for combo in itertools.product(*per_agent):
                rnds = tuple(
                    tuple((a, beh[k]) for a, beh in zip(faulty, combo) if beh[k] is not None)
                    for k in range(rounds)
                )
                out.append(AdversarySchedule(fm.kind, frozenset(faulty), rnds))
                if len(out) > budget:
                    raise ResourceError("schedule budget exceeded", len(out))
    return out


def _whole_run_behaviors(fm: FailureModel, agent: int, rounds: int, alphabet_bound: int) -> list[tuple]:
    if fm.kind == "crash":
        never = tuple(("up",) for _ in range(rounds))
        out = [never]
        for r in range(rounds):
            for beh in _crash_options(agent, fm.n)[1:]:
                out.append(tuple(("up",) for _ in range(r)) + (beh,) + (None,) * (rounds - r - 1))
        return out
    per_round = [_agent_round_options(fm, agent, k, False, alphabet_bound, fm.t + 1) for k in range(1, rounds + 1)]
    return list(itertools.product(*per_round))


def _initial_local(agent: int, pref: str) -> LocalState:
    return LocalState(id=agent, round=0, pref=pref, heard=ClaimTree.from_claims({(agent,): pref}), decision=None)


DECISION_RULES = {
    "any-attack": lambda heard: ATTACK if heard.any_value(ATTACK) else RETREAT,
    "always-retreat": lambda heard: RETREAT,
}


def eig_protocol(n: int, t: int, rule: str = "any-attack") -> JointProtocol:
    """Full-information protocol deciding at the end of round ``t + 1``."""
    if n < 2 or not 0 <= t < n:
        raise ConfigurationError(f"need n >= 2 and 0 <= t < n, got n={n}, t={t}")
    if rule not in DECISION_RULES:
        raise ConfigurationError(f"unknown decision rule {rule!r}")

    def policy_for(agent):
        def policy(s):
            m = s["round"]
            if m > t:
                return NOOP
            relay = {c + (agent,): v for c, v in s["heard"].claims().items()
                     if len(c) == m and agent not in c} if m else {(agent,): s["pref"]}
            decide = rule if m == t else None
            return Action("send", (ClaimTree.from_claims(relay), decide))
        return Protocol(policy, f"eig-{agent}")

    return JointProtocol(tuple(policy_for(a) for a in range(1, n + 1)), name=f"eig(n={n},t={t},{rule})")


def build_agreement_context(fm: FailureModel, horizon: int, claim_alphabet_bound: int = 2,
                            preferences: Iterable[tuple] | None = None,
                            faulty_sets: Iterable[frozenset] | None = None) -> Context:
    n, t = fm.n, fm.t
    active_rounds = t + 1

    def env_policy(env):
        rnd = env["round"] + 1
        crashed = dict(env["crashed"])
        actors = sorted(env["faulty"])
        options = [
            [(a, o) for o in _agent_round_options(fm, a, rnd, a in crashed, claim_alphabet_bound, active_rounds)]
            for a in actors
        ]
        acts = []
        for combo in itertools.product(*options):
            acts.append(Action("adversary", tuple((a, o) for a, o in combo if o is not None)))
        return acts

    def transition(g, ja):
        env = g.env
        rnd = env["round"] + 1
        faulty = env["faulty"]
        behavior = dict(ja.env.payload)
        crashed = dict(env["crashed"])
        inbox = {j: [] for j in range(1, n + 1)}
        for i, act in enumerate(ja.agents, start=1):
            msg = act.payload[0] if act.label == "send" else None
            for j in range(1, n + 1):
                if j == i:
                    continue
                out = msg
                if i in faulty:
                    if fm.kind == "crash":
                        if i in crashed:
                            out = None
                        elif behavior[i][0] == "crash" and j not in behavior[i][1]:
                            out = None
                    elif fm.kind == "omission":
                        if j not in behavior[i]:
                            out = None
                    elif rnd <= active_rounds:
                        out = dict(behavior[i])[j]
                    else:
                        out = None
                if out is not None:
                    inbox[j].append((i, out))
        if fm.kind == "crash":
            for i, beh in behavior.items():
                if beh[0] == "crash":
                    crashed[i] = rnd
        new_locals = []
        for j, (s, act) in enumerate(zip(g.locals, ja.agents), start=1):
            heard = s["heard"]
            fresh = {}
            for sender, tree in inbox[j]:
                for chain, v in tree.claims().items():
                    # Receivers parse and drop anything malformed for this round.
                    if len(chain) == rnd and chain[-1] == sender and len(set(chain)) == rnd and v in VALUES:
                        fresh[chain] = v
            if fresh:
                heard = heard.merge(ClaimTree.from_claims(fresh))
            decision = s["decision"]
            if act.label == "send" and act.payload[1] is not None and decision is None:
                decision = (DECISION_RULES[act.payload[1]](heard), rnd)
            new_locals.append(s.replace(round=rnd, heard=heard, decision=decision))
        new_env = env.replace(round=rnd, crashed=tuple(sorted(crashed.items())))
        return GlobalState(new_env, tuple(new_locals))

    def receives(prev, nxt, agent):
        return prev.locals[agent - 1]["heard"] != nxt.locals[agent - 1]["heard"]

    prefs_list = list(itertools.product(VALUES, repeat=n)) if preferences is None else [tuple(p) for p in preferences]
    if faulty_sets is None:
        faulty_sets = [frozenset(c) for k in range(t + 1) for c in itertools.combinations(range(1, n + 1), k)]
    initial = []
    for prefs in prefs_list:
        for f in faulty_sets:
            env = LocalState(round=0, kind=fm.kind, prefs=prefs, faulty=frozenset(f), crashed=())
            initial.append(GlobalState(env, tuple(_initial_local(a, p) for a, p in enumerate(prefs, start=1))))
    return Context(
        env_protocol=Protocol(env_policy, f"{fm.kind}-adversary", nondeterministic=True),
        initial_states=initial,
        transition=transition,
        receives=receives,
        name=f"agreement-{fm.kind}",
        info={"failure_model": fm, "horizon": horizon, "claim_alphabet_bound": claim_alphabet_bound},
    )


def run_agreement(jp: JointProtocol, fm: FailureModel, horizon: int, budget: int = 10**6,
                  workers: int = 1, claim_alphabet_bound: int = 2) -> System:
    """System over every initial preference vector and every adversary schedule."""
    if jp.n != fm.n:
        raise ConfigurationError(f"protocol has {jp.n} agents, failure model {fm.n}")
    if horizon < fm.t + 1:
        raise ConfigurationError(f"horizon must be at least t+1 = {fm.t + 1}")
    ctx = build_agreement_context(fm, horizon, claim_alphabet_bound)
    return generate_system(ctx, jp, horizon, budget=budget, workers=workers)


def schedule_of(run: Run) -> AdversarySchedule:
    env0 = run.states[0].env
    return AdversarySchedule(env0["kind"], env0["faulty"], tuple(a.payload for a in run.witness))


def nonfaulty(run: Run) -> list[int]:
    faulty = run.states[0].env["faulty"]
    return [a for a in range(1, run.states[0].n + 1) if a not in faulty]


def _witness(sys: System, ri: int, **extra) -> dict:
    run = sys.runs[ri]
    sched = schedule_of(run)
    return {"run": ri, "prefs": list(run.states[0].env["prefs"]),
            "schedule": sched.to_dict(), "summary": sched.describe(), **extra}


def _decisions(run: Run) -> dict:
    final = run.states[-1]
    return {a: final.locals[a - 1]["decision"] for a in nonfaulty(run)}


def _liveness(sys: System) -> list:
    out = []
    for ri, run in enumerate(sys.runs):
        undecided = [a for a, d in _decisions(run).items() if d is None]
        if undecided:
            out.append(_witness(sys, ri, violation="liveness", undecided=undecided))
    return out


def check_agreement(sys: System) -> Verdict:
    bad = _liveness(sys)
    for ri, run in enumerate(sys.runs):
        values = {d[0] for d in _decisions(run).values() if d is not None}
        if len(values) > 1:
            decisions = {str(a): d[0] for a, d in _decisions(run).items() if d is not None}
            bad.append(_witness(sys, ri, violation="agreement", decisions=decisions))
    return Verdict("agreement", not bad, {"runs": len(sys.runs), "counterexamples": len(bad)}, bad)


def check_validity(sys: System) -> Verdict:
    bad = _liveness(sys)
    checked = 0
    for ri, run in enumerate(sys.runs):
        env = run.states[0].env
        prefs = set(env["prefs"])
        if env["faulty"] or len(prefs) != 1:
            continue
        checked += 1
        (v,) = prefs
        wrong = {str(a): d[0] for a, d in _decisions(run).items() if d is not None and d[0] != v}
        if wrong:
            bad.append(_witness(sys, ri, violation="validity", expected=v, decisions=wrong))
    return Verdict("validity", not bad, {"runs_checked": checked, "counterexamples": len(bad)}, bad)


def check_simultaneity(sys: System, expected_round: int | None = None) -> Verdict:
    bad = _liveness(sys)
    for ri, run in enumerate(sys.runs):
        rounds = {d[1] for d in _decisions(run).values() if d is not None}
        if len(rounds) > 1 or (expected_round is not None and rounds and rounds != {expected_round}):
            bad.append(_witness(sys, ri, violation="simultaneity", rounds=sorted(rounds)))
    detail = {"runs": len(sys.runs), "counterexamples": len(bad)}
    if expected_round is not None:
        detail["expected_round"] = expected_round
    return Verdict("simultaneity", not bad, detail, bad)


def first_heard_attack(run: Run, agent: int) -> int | None:
    for m, g in enumerate(run.states):
        if g.locals[agent - 1]["heard"].any_value(ATTACK):
            return m
    return None


def check_chain_property(sys: System, t: int) -> Verdict:
    """If nonfaulty i first hears an attack claim at round t' < t+1, every nonfaulty j has heard one by t'+1."""
    bad = []
    for ri, run in enumerate(sys.runs):
        good = nonfaulty(run)
        for i in good:
            first = first_heard_attack(run, i)
            if first is None or first >= t + 1:
                continue
            for j in good:
                fj = first_heard_attack(run, j)
                if fj is None or fj > first + 1:
                    bad.append(_witness(sys, ri, i=i, j=j, first_i=first, first_j=fj))
    return Verdict("chain-property", not bad, {"counterexamples": len(bad)}, bad)


def some_attack_preference(sys: System) -> Event:
    return sys.event("some-attack-pref", lambda s, p: ATTACK in s.env(p)["prefs"])


def faulty_event(sys: System, agent: int) -> Event:
    return sys.event(f"faulty-{agent}", lambda s, p: agent in s.env(p)["faulty"])


def find_run(sys: System, prefs: tuple, schedule: AdversarySchedule | None = None) -> int:
    for ri, run in enumerate(sys.runs):
        if run.states[0].env["prefs"] != tuple(prefs):
            continue
        if schedule is None:
            if not run.states[0].env["faulty"]:
                return ri
        elif schedule_of(run) == schedule:
            return ri
    raise LookupError("no run with that preference vector and schedule")


def silent_schedule(n: int, t: int, agents: Iterable[int], horizon: int) -> AdversarySchedule:
    """Every agent in ``agents`` crashes in round 1 without sending anything."""
    agents = sorted(agents)
    if len(agents) > t:
        raise ConfigurationError("more silent agents than t")
    first = tuple((a, ("crash", frozenset())) for a in agents)
    return AdversarySchedule("crash", frozenset(agents), (first,) + ((),) * (horizon - 1))


def lower_bound_experiment(n: int, t: int, budget: int = 10**6, workers: int = 1) -> dict:
    """When does "some initial preference was attack" become nonfaulty common knowledge?

    Uses the crash full-information system up to round t+1. Reports the
    first round it holds on the failure-free all-attack run, the earliest
    round per schedule on all-attack runs, and whether agents silenced in
    round 1 are identified as faulty by everyone else after round 1.
    """
    if n > 4 or t > 1:
        raise ConfigurationError("lower-bound experiment is limited to n <= 4, t <= 1")
    fm = FailureModel("crash", t, n)
    horizon = t + 1
    sys = run_agreement(eig_protocol(n, t), fm, horizon, budget=budget, workers=workers)
    e = some_attack_preference(sys)
    cn = nonfaulty_common_knowledge(sys, e)
    all_attack = (ATTACK,) * n

    def earliest(ri):
        for m in range(horizon + 1):
            if Point(ri, m) in cn:
                return m
        return None

    ff = find_run(sys, all_attack)
    by_round = {m: Point(ff, m) in cn for m in range(horizon + 1)}
    per_schedule = []
    for ri, run in enumerate(sys.runs):
        if run.states[0].env["prefs"] == all_attack:
            per_schedule.append({"run": ri, "schedule": schedule_of(run).describe(), "earliest": earliest(ri)})
    silent = []
    if t >= 1:
        for a in range(1, n + 1):
            ri = find_run(sys, all_attack, silent_schedule(n, t, [a], horizon))
            fe = faulty_event(sys, a)
            identified = all(Point(ri, 1) in knows(sys, i, fe) for i in range(1, n + 1) if i != a)
            silent.append({"silent_agent": a, "run": ri, "identified_after_round_1": identified,
                           "earliest": earliest(ri)})
    finite = [s["earliest"] for s in per_schedule if s["earliest"] is not None]
    return {
        "n": n,
        "t": t,
        "runs": len(sys.runs),
        "failure_free_by_round": {str(m): v for m, v in by_round.items()},
        "failure_free_first_round": next((m for m, v in by_round.items() if v), None),
        "latest_earliest_round": max(finite) if finite else None,
        "per_schedule": per_schedule,
        "silent_round_1": silent,
    }


def witness_dump(sys: System, ri: int, fm: FailureModel, protocol: str = "any-attack",
                 claim_alphabet_bound: int = 2) -> str:
    """Versioned JSON record from which :func:`replay_witness` rebuilds the run."""
    run = sys.runs[ri]
    doc = {
        "format": WITNESS_FORMAT,
        "version": WITNESS_VERSION,
        "n": fm.n,
        "t": fm.t,
        "failures": fm.kind,
        "horizon": sys.horizon,
        "protocol": protocol,
        "claim_alphabet_bound": claim_alphabet_bound,
        "prefs": list(run.states[0].env["prefs"]),
        "schedule": schedule_of(run).to_dict(),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def replay_witness(text: str) -> Run:
    doc = json.loads(text)
    if doc.get("format") != WITNESS_FORMAT or doc.get("version") != WITNESS_VERSION:
        raise ConfigurationError("not a version-1 agreement witness")
    fm = FailureModel(doc["failures"], doc["t"], doc["n"])
    sched = AdversarySchedule.from_dict(doc["schedule"])
    prefs = tuple(doc["prefs"])
    ctx = build_agreement_context(fm, doc["horizon"], doc["claim_alphabet_bound"],
                                  preferences=[prefs], faulty_sets=[sched.faulty])
    jp = eig_protocol(fm.n, fm.t, doc["protocol"])
    return replay(ctx, jp, ctx.initial_states[0], [Action("adversary", rnd) for rnd in sched.rounds])
