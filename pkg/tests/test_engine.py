import itertools

import pytest

from runsys import byzantine as bz
from runsys import coordinated_attack as ca
from runsys.core import GlobalState, LocalState, Run
from runsys.engine import (NOOP, Action, Context, JointAction, JointProtocol, Protocol, check_umd_witnesses,
                           generate_system, is_consistent, replay, select_joint_actions, step)
from runsys.errors import ConfigurationError, InternalError, ResourceError


def _counter_context(env_choices=("tick",), synchronous=True):
    def transition(g, ja):
        return GlobalState(g.env.replace(round=g.env["round"] + 1),
                           tuple(s.replace(round=s["round"] + 1) for s in g.locals))

    g0 = GlobalState(LocalState(round=0), (LocalState(round=0), LocalState(round=0)))
    env = Protocol(lambda e: [Action(c) for c in env_choices], "env", nondeterministic=True)
    return Context(env, [g0], transition, synchronous=synchronous)


NOOPS = JointProtocol((Protocol(lambda s: NOOP), Protocol(lambda s: NOOP)))


def test_deterministic_env_single_joint_action():
    ctx = _counter_context()
    assert len(select_joint_actions(ctx, NOOPS, ctx.initial_states[0])) == 1


def test_noop_step_increments_round():
    ctx = _counter_context()
    g = ctx.initial_states[0]
    (ja,) = select_joint_actions(ctx, NOOPS, g)
    nxt = step(ctx, g, ja)
    assert nxt.env["round"] == 1 and nxt.locals == (LocalState(round=1), LocalState(round=1))


def test_deterministic_context_one_run():
    sys = generate_system(_counter_context(), NOOPS, 3)
    assert len(sys.runs) == 1 and sys.horizon == 3


def test_env_choices_with_equal_successors_collapse():
    sys = generate_system(_counter_context(("a", "b")), NOOPS, 3)
    assert len(sys.runs) == 1


def test_async_schedules_every_nonempty_mover_set():
    ctx = _counter_context(synchronous=False)
    acts = select_joint_actions(ctx, NOOPS, ctx.initial_states[0])
    movers = sorted(sorted(ja.env.payload[0]) for ja in acts)
    assert movers == [[1], [1, 2], [2]]


def test_nondeterministic_agent_protocol_rejected():
    with pytest.raises(ConfigurationError):
        JointProtocol((Protocol(lambda s: [NOOP], nondeterministic=True),))


def test_undefined_agent_protocol_names_agent():
    ctx = _counter_context()
    bad = JointProtocol((Protocol(lambda s: NOOP), Protocol(lambda s: None, "broken")))
    with pytest.raises(ConfigurationError, match="agent 2"):
        select_joint_actions(ctx, bad, ctx.initial_states[0])


def test_transition_error_is_internal():
    ctx = _counter_context()
    ctx.transition = lambda g, ja: 1 / 0
    with pytest.raises(InternalError):
        generate_system(ctx, NOOPS, 1)


def test_budget_exceeded_reports_count():
    sc = ca.MessengerScenario(4, 6)
    with pytest.raises(ResourceError) as info:
        ca.messenger_system(sc, budget=5)
    assert info.value.count > 5
    assert "reached" in str(info.value)


def test_messenger_in_flight_offers_deliver_and_lose():
    sc = ca.MessengerScenario(2, 2, plan_uncertain=False)
    ctx = ca.build_messenger_context(sc)
    acts = select_joint_actions(ctx, ca.acknowledgment_protocol(2), ctx.initial_states[0])
    assert [ja.env for ja in acts] == [ca.DELIVER, ca.LOSE]
    assert acts[0].agents[0].label == "send"


def test_delivery_step_adds_message_to_receiver():
    sc = ca.MessengerScenario(1, 1, plan_uncertain=False)
    ctx = ca.build_messenger_context(sc)
    g = ctx.initial_states[0]
    deliver, lose = select_joint_actions(ctx, ca.acknowledgment_protocol(1), g)
    assert step(ctx, g, deliver).local(ca.B)["received"] == (1,)
    assert step(ctx, g, lose).local(ca.B)["received"] == ()
    assert step(ctx, g, lose).local(ca.A)["sent"] == (1,)


def test_crash_round_one_one_action_per_subset():
    fm = bz.FailureModel("crash", 1, 3)
    ctx = bz.build_agreement_context(fm, 2, faulty_sets=[frozenset({2})], preferences=[("attack",) * 3])
    acts = select_joint_actions(ctx, bz.eig_protocol(3, 1), ctx.initial_states[0])
    # Oracle: "up" plus a crash serving each subset of {1, 3}.
    expected = {("up",)} | {("crash", frozenset(s)) for k in range(3) for s in itertools.combinations((1, 3), k)}
    assert {dict(ja.env.payload)[2] for ja in acts} == expected
    assert len(acts) == 5


def test_eig_round_one_full_exchange():
    fm = bz.FailureModel("crash", 0, 3)
    prefs = ("attack", "retreat", "attack")
    ctx = bz.build_agreement_context(fm, 1, preferences=[prefs])
    g = ctx.initial_states[0]
    (ja,) = select_joint_actions(ctx, bz.eig_protocol(3, 0), g)
    nxt = step(ctx, g, ja)
    for j in range(1, 4):
        claims = nxt.local(j)["heard"].claims()
        assert claims == {(i,): prefs[i - 1] for i in range(1, 4)}


def test_messenger_run_counts():
    # Oracle: the protocol only attempts transits whose predecessor arrived,
    # so with k transits there are k + 1 delivery patterns.
    for k in range(4):
        sys = ca.messenger_system(ca.MessengerScenario(k, max(1, k), plan_uncertain=False))
        assert len(sys.runs) == k + 1


def test_two_transits_horizon_two_blind_sender():
    # Oracle: if both transits are always attempted, every one of the 2**2
    # delivery patterns is a separate run.
    sc = ca.MessengerScenario(2, 2, plan_uncertain=False)
    ctx = ca.build_messenger_context(sc)

    def blind(agent):
        def policy(s):
            if agent == ca.A and s["round"] == 0:
                return Action("send", (1, False))
            if agent == ca.B and s["round"] == 1:
                return Action("send", (2, False))
            return Action("wait", False)
        return Protocol(policy)

    sys = generate_system(ctx, JointProtocol((blind(ca.A), blind(ca.B))), 2)
    assert sorted(r.states[-1].env["pattern"] for r in sys.runs) == sorted(ca.delivery_patterns(sc))


def test_crash_run_count_matches_schedule_counter():
    # Oracle: with t=1, a schedule is "no failure" or (agent, never crash) or
    # (agent, crash round, subset still served).
    for n in (3, 4):
        rounds = 2
        schedules = 1 + n * (rounds * 2 ** (n - 1) + 1)
        sys = bz.run_agreement(bz.eig_protocol(n, 1), bz.FailureModel("crash", 1, n), rounds)
        assert len(bz.enumerate_schedules(bz.FailureModel("crash", 1, n), rounds)) == schedules
        assert len(sys.runs) == 2 ** n * schedules


def test_every_run_replays_and_is_consistent():
    sc = ca.MessengerScenario(3, 4)
    ctx = ca.build_messenger_context(sc)
    jp = ca.acknowledgment_protocol(3)
    sys = generate_system(ctx, jp, 4)
    for r in sys.runs:
        assert replay(ctx, jp, r.states[0], r.witness) == r
        assert is_consistent(ctx, jp, r)


def test_inconsistent_run_detected():
    sc = ca.MessengerScenario(1, 1, plan_uncertain=False)
    ctx = ca.build_messenger_context(sc)
    jp = ca.acknowledgment_protocol(1)
    g0 = ctx.initial_states[0]
    forged = Run((g0, g0))
    assert not is_consistent(ctx, jp, forged)


def test_generation_is_exhaustive_against_hand_runs():
    sc = ca.MessengerScenario(2, 2, plan_uncertain=False)
    ctx = ca.build_messenger_context(sc)
    jp = ca.acknowledgment_protocol(2)
    sys = generate_system(ctx, jp, 2)
    g0 = ctx.initial_states[0]
    for choices in itertools.product((ca.DELIVER, ca.LOSE), repeat=2):
        try:
            r = replay(ctx, jp, g0, choices)
        except ConfigurationError:
            continue
        assert r in sys.runs


def test_agent_protocol_is_a_function_of_local_state():
    sys = bz.run_agreement(bz.eig_protocol(3, 1), bz.FailureModel("omission", 1, 3), 2)
    jp = bz.eig_protocol(3, 1)
    seen = {}
    for p in sys.points():
        for a in sys.agents():
            s = sys.local(p, a)
            act = jp.protocols[a - 1](s)
            assert seen.setdefault((a, s), act) == act


def test_workers_do_not_change_the_system():
    fm = bz.FailureModel("crash", 1, 3)
    one = bz.run_agreement(bz.eig_protocol(3, 1), fm, 2, workers=1)
    four = bz.run_agreement(bz.eig_protocol(3, 1), fm, 2, workers=4)
    assert one.runs == four.runs
    assert [r.witness for r in one.runs] == [r.witness for r in four.runs]


def test_umd_holds_for_lossy_messenger():
    sc = ca.MessengerScenario(4, 4)
    ctx = ca.build_messenger_context(sc)
    v = check_umd_witnesses(generate_system(ctx, ca.acknowledgment_protocol(4), 4), ctx)
    assert v.passed and v.detail["receipts_checked"] > 0


def test_umd_witness_for_first_delivery_by_hand():
    # The delivered-at-1 run is matched by the lost-at-1 run: same history
    # before time 1, B receives nothing, and A's state agrees through time 1.
    sc = ca.MessengerScenario(1, 2, plan_uncertain=False)
    ctx = ca.build_messenger_context(sc)
    sys = generate_system(ctx, ca.acknowledgment_protocol(1), 2)
    by_pattern = {r.states[-1].env["pattern"]: r for r in sys.runs}
    delivered, lost = by_pattern[("delivered",)], by_pattern[("lost",)]
    assert delivered.states[0] == lost.states[0]
    assert all(delivered.states[k].local(ca.A) == lost.states[k].local(ca.A) for k in range(3))
    assert check_umd_witnesses(sys, ctx).passed


def test_umd_fails_for_reliable_delivery():
    sc = ca.MessengerScenario(2, 3, reliable=True)
    ctx = ca.build_messenger_context(sc)
    v = check_umd_witnesses(generate_system(ctx, ca.acknowledgment_protocol(2), 3), ctx)
    assert not v.passed and v.witnesses


def test_umd_vacuous_without_messages():
    ctx = _counter_context()
    v = check_umd_witnesses(generate_system(ctx, NOOPS, 3), ctx)
    assert v.passed and v.detail["receipts_checked"] == 0


def test_joint_action_wraps_agents_as_tuple():
    ja = JointAction(NOOP, [NOOP])
    assert ja.agents == (NOOP,)
