"""Scenario files, epistemic queries and reports.

A scenario is a YAML document naming a suite, its parameters, optional
named events and a list of queries with expectations. Running it builds a
system, evaluates the suite's own verdicts and the queries, and produces a
report whose content depends only on the scenario (timing lives in its own
section).
"""
from __future__ import annotations

import os
import re
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import jsonschema
import yaml

from . import byzantine as bz
from . import coordinated_attack as ca
from . import games
from .core import Event, GlobalState, LocalState, Point, Run, System, to_dot
from .engine import DEFAULT_BUDGET, check_umd_witnesses, generate_system
from .epistemics import AgentGroup, common_knowledge, everyone_knows, knows, nonfaulty_common_knowledge
from .errors import ConfigurationError
from .verdict import Verdict

REPORT_FORMAT = "runsys-report"
REPORT_VERSION = 1
BUDGET_ENV = "RUNSYS_BUDGET"
MAX_LISTED = 20

SUITES = {
    "coord-attack": "two generals with a lossy (or reliable) messenger",
    "byzantine": "synchronous agreement under crash, omission or Byzantine failures",
    "game": "normal-form, extensive-form, state-space and imperfect-recall game models",
    "custom": "a system given run by run in the scenario file",
}

_POINT = {
    "oneOf": [
        {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        {"type": "object", "properties": {"run": {"type": ["string", "integer"]}, "time": {"type": "integer"}},
         "required": ["run", "time"], "additionalProperties": False},
    ]
}

SCHEMA = {
    "type": "object",
    "properties": {
        "suite": {"enum": list(SUITES)},
        "name": {"type": "string"},
        "budget": {"type": "integer", "minimum": 1},
        "workers": {"type": "integer", "minimum": 1},
        "params": {"type": "object"},
        "events": {"type": "object", "additionalProperties": {"type": ["object", "string"]}},
        "queries": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "query": {"type": "string"},
                    "expect": {"enum": ["empty", "nonempty", "all"]},
                    "holds_at": {"type": "array", "items": _POINT},
                    "fails_at": {"type": "array", "items": _POINT},
                },
                "required": ["query"],
                "additionalProperties": False,
            },
        },
        "output": {
            "type": "object",
            "properties": {"report": {"type": "string"}, "graph": {"type": "string"},
                           "witness": {"type": "string"}},
            "additionalProperties": False,
        },
    },
    "required": ["suite"],
    "additionalProperties": False,
}

PARAM_SCHEMAS = {
    "coord-attack": {
        "type": "object",
        "properties": {
            "transits": {"type": "integer", "minimum": 0},
            "horizon": {"type": "integer", "minimum": 1},
            "attack_rule": {"enum": list(ca.ATTACK_RULES)},
            "reliable": {"type": "boolean"},
            "plan_uncertain": {"type": "boolean"},
            "payoffs": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
            "max_depth": {"type": "integer", "minimum": 0},
        },
        "additionalProperties": False,
    },
    "byzantine": {
        "type": "object",
        "properties": {
            "n": {"type": "integer", "minimum": 2},
            "t": {"type": "integer", "minimum": 0},
            "failures": {"enum": list(bz.KINDS)},
            "horizon": {"type": "integer", "minimum": 1},
            "experiment": {"enum": ["check", "lower-bound"]},
            "protocol": {"enum": list(bz.DECISION_RULES)},
            "claim_alphabet_bound": {"type": "integer", "minimum": 1, "maximum": len(bz.CLAIM_ALPHABET)},
        },
        "additionalProperties": False,
    },
    "game": {
        "type": "object",
        "properties": {
            "model": {"enum": ["figure1", "figure3", "imperfect-recall", "normal-form", "state-space"]},
            "base": {"type": "object", "additionalProperties": {"type": "string"}},
            "base_name": {"type": "string"},
            "switch": {"type": "object", "additionalProperties": {
                "type": "object", "properties": {"name": {"type": "string"},
                                                 "choices": {"type": "object"}},
                "required": ["name", "choices"], "additionalProperties": False}},
            "switch_aware": {"type": "boolean"},
            "payoffs": {"type": "object", "additionalProperties": {"type": "number"}},
            "nature": {"type": "object", "additionalProperties": {"type": "number"}},
            "game": {"type": "object"},
            "tree": {"type": "object"},
            "state_space": {"type": "object"},
        },
        "additionalProperties": False,
    },
    "custom": {
        "type": "object",
        "properties": {
            "agents": {"type": "integer", "minimum": 1},
            "agent_names": {"type": "array", "items": {"type": "string"}},
            "runs": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "properties": {"env": {"type": "object"},
                                       "agents": {"type": "array", "items": {"type": "object"}}},
                        "required": ["agents"],
                        "additionalProperties": False,
                    },
                },
            },
        },
        "required": ["runs"],
        "additionalProperties": False,
    },
}


def _freeze(value):
    if isinstance(value, list):
        return tuple(_freeze(v) for v in value)
    if isinstance(value, dict):
        return LocalState({k: _freeze(v) for k, v in value.items()})
    return value


def _plain(value):
    """Make a value JSON-friendly with a stable shape."""
    if isinstance(value, LocalState) or isinstance(value, dict):
        return {str(k): _plain(v) for k, v in (value.items())}
    if isinstance(value, (frozenset, set)):
        return sorted(_plain(v) for v in value)
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    return value


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, path)


def parse_config(text: str, where: str = "<config>") -> dict:
    try:
        config = yaml.safe_load(text)
        tree = yaml.compose(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{where}: YAML error: {exc}") from exc
    validate_config(config, where, tree)
    return config


def _line_of(tree, path) -> int | None:
    """1-based line of the YAML node at ``path``, or of its closest ancestor."""
    node, line = tree, None
    for key in path:
        if node is None:
            break
        line = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            node = next((v for k, v in node.value if k.value == key), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            node = None
    if node is not None:
        line = node.start_mark.line + 1
    return line


def validate_config(config: Any, where: str = "<config>", tree=None) -> None:
    if not isinstance(config, dict):
        raise ConfigurationError(f"{where}: a scenario must be a mapping")
    path: list = []
    try:
        jsonschema.validate(config, SCHEMA)
        path = ["params"]
        jsonschema.validate(config.get("params", {}), PARAM_SCHEMAS[config["suite"]])
    except jsonschema.ValidationError as exc:
        full = path + list(exc.absolute_path)
        if exc.validator == "additionalProperties" and isinstance(exc.instance, dict):
            extra = sorted(set(exc.instance) - set(exc.schema.get("properties", {})))
            if extra:
                full.append(extra[0])
        line = _line_of(tree, full) if tree is not None else None
        at = f"{where}:{line}" if line else where
        field_path = "/".join(map(str, full)) or "<root>"
        raise ConfigurationError(f"{at}: field {field_path}: {exc.message}") from exc


# Predicates over points -------------------------------------------------

def compile_predicate(spec: dict | str, builtins: dict[str, Event], sys: System,
                      agent_names: dict[str, int]) -> Callable[[System, Point], bool]:
    """Compile a predicate tree; a bare string names an already defined event."""
    if isinstance(spec, str):
        spec = {"builtin": spec}
    if not isinstance(spec, dict) or len(spec) == 0:
        raise ConfigurationError(f"bad predicate {spec!r}")
    if "builtin" in spec:
        name = spec["builtin"]
        if name in ("true", "false"):
            return lambda s, p, v=(name == "true"): v
        if name not in builtins:
            raise ConfigurationError(f"unknown builtin event {name!r}; known: {sorted(builtins)}")
        e = builtins[name]
        return lambda s, p: p in e
    if "all" in spec:
        parts = [compile_predicate(x, builtins, sys, agent_names) for x in spec["all"]]
        return lambda s, p: all(f(s, p) for f in parts)
    if "any" in spec:
        parts = [compile_predicate(x, builtins, sys, agent_names) for x in spec["any"]]
        return lambda s, p: any(f(s, p) for f in parts)
    if "not" in spec:
        inner = compile_predicate(spec["not"], builtins, sys, agent_names)
        return lambda s, p: not inner(s, p)
    if "time" in spec:
        m = spec["time"]
        return lambda s, p: p.time == m
    if "time_ge" in spec:
        m = spec["time_ge"]
        return lambda s, p: p.time >= m
    if "atom" in spec:
        who = spec.get("of", "env")
        key = spec["atom"]
        if who != "env":
            agent = agent_names.get(str(who), who)
            if not isinstance(agent, int):
                raise ConfigurationError(f"unknown agent {who!r}")
            sys.check_agent(agent)

        def get(s, p):
            state = s.env(p) if who == "env" else s.local(p, agent)
            try:
                return state[key]
            except (KeyError, TypeError):
                return None
        if "equals" in spec:
            target = _freeze(spec["equals"])
            return lambda s, p: get(s, p) == target
        if "contains" in spec:
            target = _freeze(spec["contains"])
            return lambda s, p: (lambda v: v is not None and target in v)(get(s, p))
        if "at_least" in spec:
            bound = spec["at_least"]
            return lambda s, p: (lambda v: v is not None and v >= bound)(get(s, p))
        return lambda s, p: bool(get(s, p))
    raise ConfigurationError(f"bad predicate {spec!r}")


# Queries -----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:([(){},+])|([^\s(){},+]+))")


def _tokens(text: str) -> list[str]:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ConfigurationError(f"cannot parse query {text!r} at {pos}")
        out.append(m.group(1) or m.group(2))
        pos = m.end()
    return out


def parse_query(text: str):
    """Parse ``K(i, X)``, ``E(G, X)``, ``C(G, X)``, ``CN(X)`` or an event name.

    Groups are ``all``, ``i+j+...`` or ``{i, j, ...}``; ``X`` may nest.
    """
    toks = _tokens(text)
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else None

    def take(expected=None):
        nonlocal pos
        tok = peek()
        if tok is None or (expected is not None and tok != expected):
            raise ConfigurationError(f"query {text!r}: expected {expected or 'a token'}, got {tok!r}")
        pos += 1
        return tok

    def group():
        if peek() == "{":
            take("{")
            members = [take()]
            while peek() == ",":
                take(",")
                members.append(take())
            take("}")
            return tuple(members)
        members = [take()]
        while peek() == "+":
            take("+")
            members.append(take())
        return tuple(members)

    def expr():
        name = take()
        if peek() != "(":
            return ("event", name)
        take("(")
        if name == "K":
            agent = take()
            take(",")
            node = ("K", agent, expr())
        elif name in ("E", "C"):
            g = group()
            take(",")
            node = (name, g, expr())
        elif name == "CN":
            node = ("CN", expr())
        else:
            raise ConfigurationError(f"query {text!r}: unknown operator {name!r}")
        take(")")
        return node

    ast = expr()
    if pos != len(toks):
        raise ConfigurationError(f"query {text!r}: trailing input {toks[pos:]}")
    return ast


def evaluate_query(ast, sys: System, events: dict[str, Event], agent_names: dict[str, int]) -> Event:
    def agent_of(tok):
        if tok in agent_names:
            return agent_names[tok]
        try:
            a = int(tok)
        except ValueError:
            raise ConfigurationError(f"unknown agent {tok!r}") from None
        sys.check_agent(a)
        return a

    def group_of(members):
        if members == ("all",):
            return AgentGroup.of(sys.agents(), name="all")
        return AgentGroup.of([agent_of(m) for m in members])

    kind = ast[0]
    if kind == "event":
        if ast[1] not in events:
            raise ConfigurationError(f"unknown event {ast[1]!r}; known: {sorted(events)}")
        return events[ast[1]]
    if kind == "K":
        return knows(sys, agent_of(ast[1]), evaluate_query(ast[2], sys, events, agent_names))
    if kind == "E":
        return everyone_knows(sys, group_of(ast[1]), evaluate_query(ast[2], sys, events, agent_names))
    if kind == "C":
        return common_knowledge(sys, group_of(ast[1]), evaluate_query(ast[2], sys, events, agent_names))
    return nonfaulty_common_knowledge(sys, evaluate_query(ast[1], sys, events, agent_names))


# Suites ------------------------------------------------------------------

@dataclass
class Built:
    system: System
    events: dict
    verdicts: list
    measurements: dict = field(default_factory=dict)
    agent_names: dict = field(default_factory=dict)
    witness_text: str | None = None


def _build_coord(params: dict, budget: int, workers: int) -> Built:
    payoffs = tuple(params["payoffs"]) if "payoffs" in params else None
    sc = ca.MessengerScenario(
        max_transits=params.get("transits", 4),
        horizon=params.get("horizon", 6),
        payoffs=payoffs,
        reliable=params.get("reliable", False),
        plan_uncertain=params.get("plan_uncertain", True),
    )
    ctx = ca.build_messenger_context(sc)
    jp = ca.acknowledgment_protocol(sc.max_transits, params.get("attack_rule", "never"))
    sys = generate_system(ctx, jp, sc.horizon, budget=budget, workers=workers)
    events = {
        "sent": ca.sent_event(sys),
        "delivered": ca.delivered_event(sys),
        "attack": ca.attack_event(sys),
        "A-attacks": ca.attacks_event(sys, ca.A),
        "B-attacks": ca.attacks_event(sys, ca.B),
    }
    if sc.reliable:
        # Control: with guaranteed delivery the fixpoint is non-empty.
        ck = common_knowledge(sys, ca.GENERALS, events["delivered"])
        verdicts = [Verdict("control-ck-delivery-nonempty", not ck.is_empty(), {"ck_points": len(ck)})]
    else:
        verdicts = [ca.verify_no_ck_delivery(sys)]
    verdicts += [ca.verify_attack_requires_ck(sys), ca.verify_no_coordination(sys, ctx)]
    umd = check_umd_witnesses(sys, ctx)
    measurements = {
        "umd": umd.as_dict() | {"witnesses": umd.witnesses[:MAX_LISTED]},
        "depth_on_all_delivered": ca.depth_on_all_delivered(sys, params.get("max_depth", sc.horizon + 2)),
        "delivery_patterns": len(ca.delivery_patterns(sc)),
    }
    if payoffs:
        measurements["payoffs"] = ca.payoff_annotations(sys, payoffs)
    return Built(sys, events, verdicts, measurements, {"A": ca.A, "B": ca.B})


def _build_byzantine(params: dict, budget: int, workers: int) -> Built:
    n, t = params.get("n", 4), params.get("t", 1)
    kind = params.get("failures", "crash")
    experiment = params.get("experiment", "check")
    bound = params.get("claim_alphabet_bound", 2)
    rule = params.get("protocol", "any-attack")
    if experiment == "lower-bound":
        if kind != "crash":
            raise ConfigurationError("the lower-bound experiment uses crash failures")
        result = bz.lower_bound_experiment(n, t, budget=budget, workers=workers)
        sys = bz.run_agreement(bz.eig_protocol(n, t), bz.FailureModel("crash", t, n), t + 1,
                               budget=budget, workers=workers)
        verdicts = [Verdict("ck-first-at-round-t+1", result["failure_free_first_round"] == t + 1,
                            {"first_round": result["failure_free_first_round"], "expected": t + 1})]
        if t >= 1:
            verdicts.append(Verdict("silent-faults-identified-after-round-1",
                                    all(s["identified_after_round_1"] for s in result["silent_round_1"]),
                                    {"silent": result["silent_round_1"]}))
        result = dict(result)
        result["per_schedule"] = result["per_schedule"][:MAX_LISTED]
        built = Built(sys, {}, verdicts, {"lower_bound": result})
    else:
        fm = bz.FailureModel(kind, t, n)
        horizon = params.get("horizon", t + 1)
        sys = bz.run_agreement(bz.eig_protocol(n, t, rule), fm, horizon, budget=budget, workers=workers,
                               claim_alphabet_bound=bound)
        verdicts = [bz.check_agreement(sys), bz.check_validity(sys), bz.check_simultaneity(sys, t + 1)]
        built = Built(sys, {}, verdicts)
        failing = next((v for v in verdicts if not v.passed and v.witnesses), None)
        if failing is not None:
            built.witness_text = bz.witness_dump(sys, failing.witnesses[0]["run"], fm, rule, bound)
    sys = built.system
    built.events = {"some-attack-pref": bz.some_attack_preference(sys)}
    for a in sys.agents():
        built.events[f"faulty-{a}"] = bz.faulty_event(sys, a)
    return built


def _strategy(spec: dict, name: str) -> games.Strategy:
    return games.Strategy(dict(spec), name)


def _build_game(params: dict, budget: int, workers: int) -> Built:
    model = params.get("model", "figure3")
    if model in ("figure1", "normal-form"):
        g = games.NormalFormGame.from_dict(params["game"]) if model == "normal-form" else games.FIGURE1_NORMAL
        tree = games.GameTree.from_dict(params["tree"]) if "tree" in params else games.FIGURE1_TREE
        rows = []
        ok = True
        for s1 in g.strategies[0]:
            for s2 in g.strategies[1]:
                table = games.normal_form_payoff(g, (s1, s2))
                if model == "figure1":
                    prof = [games.figure1_strategy(1, s1), games.figure1_strategy(2, s2)]
                    _, played, _ = games.simulate_play(tree, prof)
                    ok &= tuple(played) == tuple(table)
                    rows.append({"profile": [s1, s2], "table": list(table), "tree": list(played)})
                else:
                    rows.append({"profile": [s1, s2], "table": list(table)})
        verdicts = [Verdict("representation-coherence", ok, {"profiles": len(rows)},
                            [] if ok else [r for r in rows if r.get("tree") != r["table"]])]
        sys = games.build_state_space_system(games.FIGURE3) if model == "figure1" else None
        if sys is None:
            runs = [Run((GlobalState(LocalState(profile=(s1, s2)), (LocalState(), LocalState())),) * 2, witness=f"{s1},{s2}")
                    for s1 in g.strategies[0] for s2 in g.strategies[1]]
            sys = System(runs)
        return Built(sys, {}, verdicts, {"payoffs": rows}, {})
    if model in ("figure3", "state-space"):
        m = games.StateSpaceModel.from_dict(params["state_space"]) if model == "state-space" else games.FIGURE3
        sys = games.build_state_space_system(m)
        events = {}
        for s1 in games.FIGURE1_NORMAL.strategies[0]:
            for s2 in games.FIGURE1_NORMAL.strategies[1]:
                events[f"profile-{s1}-{s2}"] = games.profile_event(sys, (s1, s2))
        return Built(sys, events, [], {"states": list(m.states)}, {})
    tree = games.imperfect_recall_tree(params.get("payoffs"))
    base = _strategy(params["base"], params.get("base_name", "base")) if "base" in params else games.STRATEGY_F
    switch = None
    if "switch" in params:
        switch = {nid: _strategy(s["choices"], s["name"]) for nid, s in params["switch"].items()}
    sys = games.imperfect_recall_system(tree, base, switch, params.get("switch_aware", False))
    events = {f"at-{nid}": games.at_node(sys, nid) for nid in sorted(tree.nodes)}
    x_points = (events["at-x3"] | events["at-x4"]).points()
    locals_at = {p: sys.local(p, 1) for p in x_points}
    x3 = [p for p in x_points if p in events["at-x3"]]
    x4 = [p for p in x_points if p in events["at-x4"]]
    merged = any(locals_at[p] == locals_at[q] for p in x3 for q in x4)
    measurements = {"x3_x4_indistinguishable": merged}
    if "nature" in params:
        measurements["expected_utility"] = games.expected_utility(tree, base, params["nature"], switch)
    return Built(sys, events, [], measurements, {})


def _build_custom(params: dict, budget: int, workers: int) -> Built:
    runs = []
    for ri, spec in enumerate(params["runs"]):
        states = []
        for g in spec:
            env = _freeze(g.get("env", {}))
            states.append(GlobalState(env, tuple(_freeze(a) for a in g["agents"])))
        runs.append(Run(tuple(states), witness=ri))
    try:
        sys = System(runs)
    except ValueError as exc:
        raise ConfigurationError(f"custom system: {exc}") from exc
    names = {name: i for i, name in enumerate(params.get("agent_names", []), start=1)}
    return Built(sys, {}, [], {}, names)


BUILDERS = {"coord-attack": _build_coord, "byzantine": _build_byzantine, "game": _build_game,
            "custom": _build_custom}


def resolve_budget(flag: int | None, config: dict) -> int:
    if flag is not None:
        return flag
    if "budget" in config:
        return config["budget"]
    env = os.environ.get(BUDGET_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigurationError(f"{BUDGET_ENV} must be an integer, got {env!r}") from None
    return DEFAULT_BUDGET


def build(config: dict, budget: int | None = None, workers: int | None = None) -> Built:
    budget = resolve_budget(budget, config)
    workers = workers or config.get("workers", 1)
    built = BUILDERS[config["suite"]](config.get("params", {}), budget, workers)
    for name, spec in (config.get("events") or {}).items():
        pred = compile_predicate(spec, built.events, built.system, built.agent_names)
        built.events[name] = built.system.event(name, pred)
    return built


def _resolve_point(spec, sys: System) -> Point:
    if isinstance(spec, dict):
        run = spec["run"]
        if isinstance(run, str):
            matches = [ri for ri, r in enumerate(sys.runs) if str(r.witness) == run]
            if not matches:
                raise ConfigurationError(f"no run labelled {run!r}")
            run = matches[0]
        p = Point(run, spec["time"])
    else:
        p = Point(*spec)
    try:
        sys.check_point(p)
    except Exception as exc:
        raise ConfigurationError(str(exc)) from exc
    return p


def run_queries(config: dict, built: Built) -> list[dict]:
    out = []
    sys = built.system
    for q in config.get("queries") or []:
        result = evaluate_query(parse_query(q["query"]), sys, built.events, built.agent_names)
        checks = []
        expect = q.get("expect")
        if expect == "empty":
            checks.append(result.is_empty())
        elif expect == "nonempty":
            checks.append(not result.is_empty())
        elif expect == "all":
            checks.append(result.bits == sys.full)
        failures = []
        for spec in q.get("holds_at", []):
            p = _resolve_point(spec, sys)
            if p not in result:
                failures.append({"point": p.label(), "expected": "holds"})
        for spec in q.get("fails_at", []):
            p = _resolve_point(spec, sys)
            if p in result:
                failures.append({"point": p.label(), "expected": "fails"})
        passed = all(checks) and not failures
        if not passed and not failures:
            witness = (~result if expect == "all" else result).points()
            failures = [{"point": p.label()} for p in witness[:MAX_LISTED]]
        pts = result.points()
        out.append({
            "query": q["query"],
            "expect": expect,
            "count": len(pts),
            "points": [p.label() for p in pts[:MAX_LISTED]],
            "verdict": "pass" if passed else "fail",
            "witnesses": failures,
        })
    return out


def _verdict_entry(v: Verdict) -> dict:
    d = v.as_dict()
    d["witness_count"] = len(v.witnesses)
    d["witnesses"] = _plain(v.witnesses[:MAX_LISTED])
    d["detail"] = _plain(d["detail"])
    return d


def run_config(config: dict, budget: int | None = None, workers: int | None = None) -> tuple[int, dict, Built]:
    """Execute a validated scenario; returns ``(exit code, report, built)``."""
    started = time.perf_counter()
    built = build(config, budget, workers)
    verdicts = [_verdict_entry(v) for v in built.verdicts]
    queries = run_queries(config, built)
    failed = [v["name"] for v in verdicts if v["verdict"] == "fail"] + \
             [q["query"] for q in queries if q["verdict"] == "fail"]
    report = {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "scenario": _plain(config),
        "system": {"runs": len(built.system.runs), "points": built.system.num_points,
                   "horizon": built.system.horizon, "agents": built.system.n},
        "verdicts": verdicts,
        "queries": queries,
        "measurements": _plain(built.measurements),
        "summary": {"passed": not failed, "failed": failed},
        "timing": {"wall_seconds": round(time.perf_counter() - started, 6)},
    }
    return (0 if not failed else 1), report, built


def graph_for(config: dict, budget: int | None = None, time: int | None = None) -> str:
    built = build(config, budget)
    names = None
    if built.agent_names:
        inverse = {v: k for k, v in built.agent_names.items()}
        names = [inverse.get(a, str(a)) for a in built.system.agents()]
    return to_dot(built.system, name=config.get("name", config["suite"]).replace("-", "_"), agent_names=names,
                  time=time)
