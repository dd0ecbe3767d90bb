"""Acceptance criteria 1-10, each printed as one PASS/FAIL line.

Every criterion is a function returning a JSON-ready report plus a boolean;
criterion 10 re-runs all of them and compares the serialized reports.
"""
import json
import random
import time

import pytest

from runsys import byzantine as bz
from runsys import coordinated_attack as ca
from runsys import games
from runsys.core import Event, GlobalState, LocalState, Point, Run, System, indistinguishable, information_set
from runsys.epistemics import AgentGroup, common_knowledge, everyone_knows, iterated_everyone_knows, knows
from runsys.cli import dump_report
from runsys.engine import is_consistent
from runsys.scenario import run_config

FIGURE1_TABLE = {
    ("aa", "A"): (3, 3), ("aa", "D"): (4, 2), ("ad", "A"): (3, 2), ("ad", "D"): (4, 2),
    ("da", "A"): (1, 2), ("da", "D"): (1, 3), ("dd", "A"): (1, 2), ("dd", "D"): (1, 3),
}


def c1_figure1(workers=1):
    rows = []
    for (s1, s2), expected in sorted(FIGURE1_TABLE.items()):
        table = games.normal_form_payoff(games.FIGURE1_NORMAL, (s1, s2))
        prof = [games.figure1_strategy(1, s1), games.figure1_strategy(2, s2)]
        _, tree, _ = games.simulate_play(games.FIGURE1_TREE, prof)
        rows.append({"profile": [s1, s2], "table": list(table), "tree": list(tree), "expected": list(expected)})
    ok = len(rows) == 8 and all(r["table"] == r["tree"] == r["expected"] for r in rows)
    return ok, {"profiles": rows}


def c2_figure3(workers=1):
    sys = games.build_state_space_system(games.FIGURE3)
    run = {w: games.state_run(sys, w) for w in games.FIGURE3.states}
    k2 = knows(sys, 2, games.profile_event(sys, ("aa", "A")))
    facts = {
        "K2_at_w5": Point(run["w5"], 0) in k2,
        "K2_at_w1": Point(run["w1"], 0) in k2,
        "w3_w4_player1": indistinguishable(sys, Point(run["w3"], 0), Point(run["w4"], 0), 1),
    }
    ok = facts == {"K2_at_w5": True, "K2_at_w1": False, "w3_w4_player1": True}
    return ok, facts


def c3_depth(workers=1):
    depths = {}
    for k in range(1, 5):
        sys = ca.messenger_system(ca.MessengerScenario(k, 6), k, workers=workers)
        p = Point(ca.all_delivered_run(sys), sys.horizon)
        sent = ca.sent_event(sys)
        holds_k = p in iterated_everyone_knows(sys, ca.GENERALS, sent, k)
        holds_k1 = p in iterated_everyone_knows(sys, ca.GENERALS, sent, k + 1)
        depths[str(k)] = {"holds_at_k": holds_k, "holds_at_k+1": holds_k1}
    ok = all(d["holds_at_k"] and not d["holds_at_k+1"] for d in depths.values())
    return ok, depths


def c4_no_ck(workers=1):
    lossy = {}
    for k in range(0, 5):
        for horizon in range(max(1, k), 7):
            sys = ca.messenger_system(ca.MessengerScenario(k, horizon), k, workers=workers)
            ck = common_knowledge(sys, ca.GENERALS, ca.delivered_event(sys))
            lossy[f"{k}/{horizon}"] = len(ck)
    control = ca.messenger_system(ca.MessengerScenario(2, 3, reliable=True), workers=workers)
    control_ck = len(common_knowledge(control, ca.GENERALS, ca.delivered_event(control)))
    ok = all(v == 0 for v in lossy.values()) and control_ck > 0
    return ok, {"lossy_ck_points": lossy, "reliable_ck_points": control_ck}


def c5_crash(workers=1):
    rows = []
    for n in (3, 4):
        for t in (0, 1):
            fm = bz.FailureModel("crash", t, n)
            sys = bz.run_agreement(bz.eig_protocol(n, t), fm, t + 1, budget=10**6, workers=workers)
            verdicts = [bz.check_agreement(sys), bz.check_validity(sys), bz.check_simultaneity(sys, t + 1)]
            rows.append({"n": n, "t": t, "runs": len(sys.runs),
                         "counterexamples": {v.name: len(v.witnesses) for v in verdicts}})
    ok = all(sum(r["counterexamples"].values()) == 0 for r in rows)
    return ok, {"instances": rows}


def c6_byzantine(workers=1):
    fm = bz.FailureModel("byzantine", 1, 3)
    sys = bz.run_agreement(bz.eig_protocol(3, 1), fm, 2, workers=workers)
    found = [w for v in (bz.check_agreement(sys), bz.check_validity(sys)) for w in v.witnesses]
    replayed = False
    witness = None
    if found:
        witness = found[0]
        run = bz.replay_witness(bz.witness_dump(sys, witness["run"], fm))
        ctx = bz.build_agreement_context(fm, 2)
        replayed = run == sys.runs[witness["run"]] and is_consistent(ctx, bz.eig_protocol(3, 1), run)
    return bool(found) and replayed, {"runs": len(sys.runs), "violations": len(found),
                                      "first": witness, "replayed": replayed}


def c7_lower_bound(workers=1):
    r = bz.lower_bound_experiment(4, 1, workers=workers)
    by_round = r["failure_free_by_round"]
    ok = by_round["1"] is False and by_round["2"] is True and \
        all(s["identified_after_round_1"] for s in r["silent_round_1"])
    return ok, {"failure_free_by_round": by_round, "silent_round_1": r["silent_round_1"]}


def _random_system(rng):
    n = rng.randint(1, 3)
    horizon = rng.randint(0, 4)
    runs = []
    for ri in range(rng.randint(1, 6)):
        states = tuple(
            GlobalState(LocalState(run=ri, m=m), tuple(LocalState(v=rng.randint(0, 2)) for _ in range(n)))
            for m in range(horizon + 1))
        runs.append(Run(states))
    sys = System(runs)
    return sys, Event(sys, rng.getrandbits(sys.num_points)), Event(sys, rng.getrandbits(sys.num_points))


def _laws(sys, e, f):
    bad = []
    pts = list(sys.points())
    for a in sys.agents():
        for p in pts:
            cell = information_set(sys, p, a)
            if p not in cell:
                bad.append("reflexive")
            for q in cell:
                if not indistinguishable(sys, q, p, a):
                    bad.append("symmetric")
                if information_set(sys, q, a) != cell:
                    bad.append("transitive")
        k = knows(sys, a, e)
        if not k <= e:
            bad.append("truth")
        if knows(sys, a, k) != k:
            bad.append("introspection")
        if not knows(sys, a, e & f) <= knows(sys, a, e):
            bad.append("monotone-K")
    g = AgentGroup.of(sys.agents())
    ck = common_knowledge(sys, g, e)
    if not ck <= e:
        bad.append("truth-C")
    if not common_knowledge(sys, g, e & f) <= ck:
        bad.append("monotone-C")
    if ck != everyone_knows(sys, g, e & ck):
        bad.append("fixpoint")
    for k in range(sys.num_points + 1):
        if not ck <= iterated_everyone_knows(sys, g, e, k):
            bad.append(f"C<=E^{k}")
    return bad


def c8_properties(workers=1):
    rng = random.Random(20240601)
    violations = {}
    for i in range(120):
        for law in _laws(*_random_system(rng)):
            violations[law] = violations.get(law, 0) + 1
    return not violations, {"systems": 120, "violations": violations}


def c9_imperfect_recall(workers=1):
    tree = games.imperfect_recall_tree()
    switch = {"x1": games.STRATEGY_F_PRIME}
    aware = games.imperfect_recall_system(tree, games.STRATEGY_F, switch, switch_aware=True)
    unaware = games.imperfect_recall_system(tree, games.STRATEGY_F, switch, switch_aware=False)
    knows_node = {}
    for nid in ("x3", "x4"):
        at = games.at_node(aware, nid)
        knows_node[nid] = bool(at) and all(p in knows(aware, 1, at) for p in at.points())
    x3, x4 = games.at_node(unaware, "x3").points(), games.at_node(unaware, "x4").points()
    merged = bool(x3) and bool(x4) and all(indistinguishable(unaware, p, q, 1) for p in x3 for q in x4)
    return all(knows_node.values()) and merged, {"aware_knows_node": knows_node, "unaware_merged": merged}


CRITERIA = [
    (1, "Figure 1 coherence", c1_figure1, 1.0),
    (2, "Figure 3 knowledge facts", c2_figure3, 1.0),
    (3, "knowledge depth equals transits", c3_depth, 5.0),
    (4, "no common knowledge of delivery", c4_no_ck, 10.0),
    (5, "EIG crash correctness", c5_crash, 60.0),
    (6, "Byzantine n=3 t=1 witness", c6_byzantine, 120.0),
    (7, "lower-bound experiment", c7_lower_bound, 120.0),
    (8, "epistemic algebra properties", c8_properties, 30.0),
    (9, "imperfect recall", c9_imperfect_recall, 1.0),
]


CLI_CONFIGS = [
    {"suite": "coord-attack", "params": {}, "queries": [{"query": "C(A+B, delivered)", "expect": "empty"}]},
    {"suite": "byzantine", "params": {"n": 3, "t": 1, "failures": "byzantine"}},
    {"suite": "byzantine", "params": {"n": 4, "t": 1, "experiment": "lower-bound"},
     "queries": [{"query": "CN(some-attack-pref)", "expect": "nonempty"}]},
    {"suite": "game", "params": {"model": "figure3"}},
]


def _announce(capsys, number, name, ok, seconds):
    with capsys.disabled():
        print(f"\nacceptance {number:2d} {'PASS' if ok else 'FAIL'} {name} ({seconds:.2f}s)")


def _serialize(report):
    return json.dumps(report, sort_keys=True, default=str)


@pytest.mark.parametrize("number,name,fn,limit", CRITERIA, ids=[f"c{c[0]}" for c in CRITERIA])
def test_criterion(number, name, fn, limit, capsys):
    start = time.perf_counter()
    ok, report = fn()
    seconds = time.perf_counter() - start
    passed = ok and seconds < limit
    _announce(capsys, number, name, passed, seconds)
    assert ok, report
    assert seconds < limit, f"took {seconds:.2f}s, limit {limit}s"


def test_criterion_10_determinism(capsys):
    start = time.perf_counter()
    mismatched = []
    for number, name, fn, _ in CRITERIA:
        first = _serialize(fn(workers=1))
        again = _serialize(fn(workers=1))
        parallel = _serialize(fn(workers=4))
        if not first == again == parallel:
            mismatched.append(number)
    for config in CLI_CONFIGS:
        texts = set()
        for workers in (1, 1, 4):
            _, report, _ = run_config(config, workers=workers)
            report.pop("timing")
            texts.add(dump_report(report))
        if len(texts) != 1:
            mismatched.append(config["suite"])
    seconds = time.perf_counter() - start
    _announce(capsys, 10, "byte-identical reports (repeat, workers 1 vs 4)", not mismatched, seconds)
    assert not mismatched
