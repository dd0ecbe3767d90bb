import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from runsys import byzantine as bz
from runsys import coordinated_attack as ca
from runsys import games
from runsys.core import Event, GlobalState, LocalState, Point, Run, System, indistinguishable, information_set
from runsys.epistemics import (AgentGroup, common_knowledge, everyone_knows, iterated_everyone_knows,
                               knowledge_depth, knows, nonfaulty_common_knowledge, nonfaulty_group)
from runsys.errors import ConfigurationError


@st.composite
def systems(draw, max_runs=6, max_horizon=5, max_agents=3):
    n = draw(st.integers(1, max_agents))
    horizon = draw(st.integers(0, max_horizon - 1))
    runs = []
    for ri in range(draw(st.integers(1, max_runs))):
        states = []
        for m in range(horizon + 1):
            locs = tuple(LocalState(v=draw(st.integers(0, 2))) for _ in range(n))
            states.append(GlobalState(LocalState(run=ri, m=m), locs))
        runs.append(Run(tuple(states)))
    sys = System(runs)
    bits = draw(st.integers(0, sys.full))
    other = draw(st.integers(0, sys.full))
    return sys, Event(sys, bits, "e"), Event(sys, other, "f")


def _knows_oracle(sys, agent, e):
    return {p for p in sys.points() if all(q in e for q in sys.points() if indistinguishable(sys, p, q, agent))}


def _ck_oracle(sys, agents, e):
    # Reachability: C holds at p iff e holds at every point reachable via the
    # union of the agents' indistinguishability relations in one or more steps.
    out = set()
    for p in sys.points():
        seen, frontier = set(), [p]
        while frontier:
            x = frontier.pop()
            for q in sys.points():
                if q not in seen and any(indistinguishable(sys, x, q, a) for a in agents):
                    seen.add(q)
                    frontier.append(q)
        if all(q in e for q in seen):
            out.add(p)
    return out


@settings(max_examples=120, deadline=None)
@given(systems())
def test_indistinguishability_is_an_equivalence(data):
    sys, _, _ = data
    pts = list(sys.points())
    for a in sys.agents():
        for p in pts:
            assert indistinguishable(sys, p, p, a)
            cell = information_set(sys, p, a)
            for q in pts:
                assert indistinguishable(sys, p, q, a) == indistinguishable(sys, q, p, a)
                assert (q in cell) == (information_set(sys, q, a) == cell)
                for r in cell:
                    if indistinguishable(sys, r, q, a):
                        assert indistinguishable(sys, p, q, a)


@settings(max_examples=120, deadline=None)
@given(systems())
def test_knowledge_laws(data):
    sys, e, f = data
    everyone = AgentGroup.of(sys.agents())
    ck = common_knowledge(sys, everyone, e)
    for a in sys.agents():
        k = knows(sys, a, e)
        assert set(k.points()) == _knows_oracle(sys, a, e)
        assert k <= e
        assert knows(sys, a, k) == k
        # negative introspection
        assert knows(sys, a, ~k) == ~k
        assert knows(sys, a, e & f) <= knows(sys, a, f)
    assert ck <= e
    assert set(ck.points()) == _ck_oracle(sys, list(sys.agents()), e)
    assert common_knowledge(sys, everyone, e & f) <= common_knowledge(sys, everyone, f)
    assert ck == everyone_knows(sys, everyone, e & ck)
    for k in range(sys.num_points + 1):
        assert ck <= iterated_everyone_knows(sys, everyone, e, k)


@settings(max_examples=60, deadline=None)
@given(systems(max_agents=3), st.data())
def test_subgroup_common_knowledge_matches_oracle(data, extra):
    sys, e, _ = data
    group = extra.draw(st.sets(st.sampled_from(list(sys.agents())), min_size=1))
    assert set(common_knowledge(sys, AgentGroup.of(group), e).points()) == _ck_oracle(sys, group, e)


def test_knows_all_points(messenger):
    sys = messenger
    assert knows(sys, ca.A, sys.everything()) == sys.everything()
    assert common_knowledge(sys, ca.GENERALS, sys.everything()) == sys.everything()


@pytest.fixture
def messenger():
    return ca.messenger_system(ca.MessengerScenario(4, 6))


def test_singleton_group_everyone_is_knows(messenger):
    sent = ca.sent_event(messenger)
    assert everyone_knows(messenger, AgentGroup.of([ca.B]), sent) == knows(messenger, ca.B, sent)


def test_b_knows_after_delivery_but_a_does_not_know_it():
    sys = ca.messenger_system(ca.MessengerScenario(1, 2))
    ri = ca.all_delivered_run(sys)
    p = Point(ri, 1)
    sent = ca.sent_event(sys)
    assert p in knows(sys, ca.B, sent)
    assert p not in knows(sys, ca.A, knows(sys, ca.B, sent))


def test_everyone_knows_after_ack():
    # Oracle by information sets at horizon 2: A has the ack at (r, 2), so it
    # knows it sent; B received transit 1, so it knows too.
    sys = ca.messenger_system(ca.MessengerScenario(2, 2))
    ri = ca.all_delivered_run(sys)
    p = Point(ri, 2)
    sent = ca.sent_event(sys)
    for agent in (ca.A, ca.B):
        assert information_set(sys, p, agent) <= set(sent.points())
    assert p in everyone_knows(sys, ca.GENERALS, sent)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_depth_grows_by_one_per_transit(k):
    sys = ca.messenger_system(ca.MessengerScenario(k, 6), k)
    p = Point(ca.all_delivered_run(sys), sys.horizon)
    sent = ca.sent_event(sys)
    assert knowledge_depth(sys, ca.GENERALS, sent, p, 10) == k
    assert p in iterated_everyone_knows(sys, ca.GENERALS, sent, k)
    assert p not in iterated_everyone_knows(sys, ca.GENERALS, sent, k + 1)


def test_depth_sentinel_when_event_fails():
    sys = ca.messenger_system(ca.MessengerScenario(0, 1))
    assert knowledge_depth(sys, ca.GENERALS, ca.sent_event(sys), Point(0, 1), 5) == -1


def test_depth_capped_for_common_knowledge():
    sys = ca.messenger_system(ca.MessengerScenario(2, 3, reliable=True, plan_uncertain=False))
    p = Point(0, 3)
    assert p in common_knowledge(sys, ca.GENERALS, ca.delivered_event(sys))
    assert knowledge_depth(sys, ca.GENERALS, ca.delivered_event(sys), p, 7) == 7


def test_reliable_broadcast_single_run_ck():
    # One run: after the broadcast lands, every point at time >= 1 satisfies
    # e, and every agent's cell is a singleton, so the fixpoint is e itself.
    sys = ca.messenger_system(ca.MessengerScenario(1, 2, reliable=True, plan_uncertain=False))
    assert len(sys.runs) == 1
    delivered = ca.delivered_event(sys)
    assert common_knowledge(sys, ca.GENERALS, delivered) == delivered
    assert Point(0, 1) in delivered


def test_figure3_knowledge_of_profile():
    sys = games.build_state_space_system(games.FIGURE3)
    e = games.profile_event(sys, ("aa", "A"))
    k2 = knows(sys, 2, e)
    assert Point(games.state_run(sys, "w5"), 0) in k2
    assert Point(games.state_run(sys, "w1"), 0) not in k2


def _faulty_system(faulty_per_run):
    runs = []
    for ri, faulty in enumerate(faulty_per_run):
        env = LocalState(faulty=frozenset(faulty), run=ri)
        runs.append(Run((GlobalState(env, (LocalState(v=ri), LocalState(v=0))),)))
    return System(runs)


def test_nonfaulty_ck_vacuous_when_all_faulty():
    sys = _faulty_system([{1, 2}, set()])
    e = sys.event("first", lambda s, p: p.run == 0)
    assert everyone_knows(sys, nonfaulty_group(sys), sys.nothing()).points() == [Point(0, 0)]
    assert Point(0, 0) in nonfaulty_common_knowledge(sys, e)


def test_nonfaulty_ck_equals_fixed_ck_without_failures():
    sys = _faulty_system([set()])
    e = sys.everything()
    assert nonfaulty_common_knowledge(sys, e) == common_knowledge(sys, AgentGroup.of([1, 2]), e)
    sys = _faulty_system([set(), set()])
    e = sys.event("first", lambda s, p: p.run == 0)
    assert nonfaulty_common_knowledge(sys, e) == common_knowledge(sys, AgentGroup.of([1, 2]), e)


def test_nonfaulty_ck_needs_fault_flags():
    sys = ca.messenger_system(ca.MessengerScenario(1, 1))
    with pytest.raises(ConfigurationError):
        nonfaulty_common_knowledge(sys, sys.everything())


def test_crash_some_attack_ck_only_at_round_two():
    sys = bz.run_agreement(bz.eig_protocol(3, 1), bz.FailureModel("crash", 1, 3), 2)
    cn = nonfaulty_common_knowledge(sys, bz.some_attack_preference(sys))
    ff = bz.find_run(sys, ("attack", "retreat", "retreat"))
    assert Point(ff, 1) not in cn
    assert Point(ff, 2) in cn


def test_bad_group_rejected():
    with pytest.raises(ConfigurationError):
        AgentGroup.of([])
    with pytest.raises(ConfigurationError):
        AgentGroup()
