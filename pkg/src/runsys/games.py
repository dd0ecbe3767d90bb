"""Games in normal form, extensive form, state-space form and as systems.

The two-player game used throughout has player 1 moving (a/d), player 2
moving (A/D) without seeing that move, and, after ``a``, player 1 moving
again without seeing player 2's move. The single-agent game with imperfect
recall has nature pick x1 or x2; at either node the agent stops (S) or goes
on (B), reaching x3 or x4, which share the information set X (actions L/R).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .core import Event, GlobalState, LocalState, Run, System
from .errors import DomainError, ModelError

NATURE = "nature"


@dataclass(frozen=True)
class NormalFormGame:
    strategies: tuple  # (player-1 labels, player-2 labels)
    table: Mapping

    def __post_init__(self):
        missing = [(s1, s2) for s1 in self.strategies[0] for s2 in self.strategies[1] if (s1, s2) not in self.table]
        if missing:
            raise ModelError(f"payoff table missing profiles {missing}")

    @classmethod
    def from_dict(cls, d: dict) -> "NormalFormGame":
        rows, cols = tuple(d["rows"]), tuple(d["columns"])
        table = {}
        for r, payoffs in zip(rows, d["payoffs"]):
            for c, pair in zip(cols, payoffs):
                table[(r, c)] = tuple(pair)
        return cls((rows, cols), table)


def normal_form_payoff(g: NormalFormGame, profile: Sequence[str]) -> tuple:
    key = tuple(profile)
    if key not in g.table:
        raise DomainError(f"unknown strategy profile {key}")
    return g.table[key]


FIGURE1_NORMAL = NormalFormGame(
    (("aa", "ad", "da", "dd"), ("A", "D")),
    {
        ("aa", "A"): (3, 3), ("aa", "D"): (4, 2),
        ("ad", "A"): (3, 2), ("ad", "D"): (4, 2),
        ("da", "A"): (1, 2), ("da", "D"): (1, 3),
        ("dd", "A"): (1, 2), ("dd", "D"): (1, 3),
    },
)


@dataclass(frozen=True)
class Node:
    owner: Any = None  # player number, NATURE, or None at terminals
    actions: tuple = ()  # ((label, child id), ...)
    payoff: tuple | None = None
    infoset: str | None = None

    @property
    def terminal(self) -> bool:
        return not self.actions


class GameTree:
    def __init__(self, nodes: Mapping[str, Node], root: str):
        self.nodes = dict(nodes)
        self.root = root
        self._validate()

    def _validate(self):
        if self.root not in self.nodes:
            raise ModelError(f"root {self.root!r} is not a node")
        parent: dict[str, str] = {}
        for nid, node in self.nodes.items():
            for label, child in node.actions:
                if child not in self.nodes:
                    raise ModelError(f"node {nid!r} action {label!r} leads to unknown node {child!r}")
                if child in parent or child == self.root:
                    raise ModelError(f"node {child!r} has more than one parent")
                parent[child] = nid
            if node.terminal and node.payoff is None:
                raise ModelError(f"terminal node {nid!r} has no payoff")
            if not node.terminal and node.owner != NATURE and node.infoset is None:
                raise ModelError(f"decision node {nid!r} has no information set")
        unreachable = set(self.nodes) - set(parent) - {self.root}
        if unreachable:
            raise ModelError(f"nodes unreachable from the root: {sorted(unreachable)}")
        self.parent = parent
        for name, members in self.infosets().items():
            owners = {self.nodes[m].owner for m in members}
            labels = {tuple(a for a, _ in self.nodes[m].actions) for m in members}
            if len(owners) != 1 or len(labels) != 1:
                raise ModelError(f"information set {name!r} mixes owners or action sets")

    def infosets(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for nid, node in self.nodes.items():
            if node.infoset is not None:
                out.setdefault(node.infoset, []).append(nid)
        return out

    def child(self, nid: str, label: str) -> str:
        for a, c in self.nodes[nid].actions:
            if a == label:
                return c
        raise DomainError(f"action {label!r} not available at node {nid!r}")

    def path_to(self, nid: str) -> list[tuple[str, str]]:
        """``(node, action)`` pairs from the root down to ``nid``."""
        path = []
        while nid != self.root:
            up = self.parent[nid]
            label = next(a for a, c in self.nodes[up].actions if c == nid)
            path.append((up, label))
            nid = up
        return path[::-1]

    def has_imperfect_recall(self, player) -> bool:
        for members in self.infosets().values():
            if self.nodes[members[0]].owner != player:
                continue
            histories = set()
            for m in members:
                own = tuple((self.nodes[v].infoset, a) for v, a in self.path_to(m) if self.nodes[v].owner == player)
                histories.add(own)
            if len(histories) > 1:
                return True
        return False

    @classmethod
    def from_dict(cls, d: dict) -> "GameTree":
        nodes = {}
        for row in d["nodes"]:
            owner = row.get("owner")
            nodes[row["id"]] = Node(
                owner=owner,
                actions=tuple((a, c) for a, c in row.get("actions", {}).items()),
                payoff=tuple(row["payoff"]) if "payoff" in row else None,
                infoset=row.get("infoset"),
            )
        return cls(nodes, d["root"])


@dataclass(frozen=True)
class Strategy:
    choices: Mapping  # information set -> action
    name: str = "s"

    def action(self, tree: GameTree, nid: str) -> str:
        infoset = tree.nodes[nid].infoset
        if infoset not in self.choices:
            raise DomainError(f"strategy {self.name!r} has no action for information set {infoset!r}")
        return self.choices[infoset]


def simulate_play(tree: GameTree, profile: Mapping | Sequence, nature_choice: Sequence[str] = (),
                  switch: Mapping | None = None) -> tuple:
    """Follow ``profile`` from the root; returns ``(terminal id, payoff, visited nodes)``.

    ``profile`` maps each player to a :class:`Strategy` (a sequence is read as
    players 1, 2, ...). ``switch`` maps a node id to the strategy its owner
    adopts on reaching it.
    """
    if not isinstance(profile, Mapping):
        profile = {i: s for i, s in enumerate(profile, start=1)}
    current = dict(profile)
    nature = list(nature_choice)
    nid = tree.root
    visited = [(nid, None)]
    while not tree.nodes[nid].terminal:
        node = tree.nodes[nid]
        if node.owner == NATURE:
            if not nature:
                raise DomainError(f"no nature choice left at node {nid!r}")
            label = nature.pop(0)
        else:
            if switch and nid in switch:
                current[node.owner] = switch[nid]
            if node.owner not in current:
                raise DomainError(f"no strategy for player {node.owner!r}")
            label = current[node.owner].action(tree, nid)
        nid = tree.child(nid, label)
        visited.append((nid, {p: s.name for p, s in current.items()}))
    return nid, tree.nodes[nid].payoff, visited


def _figure1_tree() -> GameTree:
    n = {
        "root": Node(1, (("a", "Pa"), ("d", "Pd")), infoset="1.first"),
        "Pa": Node(2, (("A", "aA"), ("D", "aD")), infoset="2"),
        "Pd": Node(2, (("A", "dA"), ("D", "dD")), infoset="2"),
        "aA": Node(1, (("a", "aAa"), ("d", "aAd")), infoset="1.second"),
        "aD": Node(1, (("a", "aDa"), ("d", "aDd")), infoset="1.second"),
        "aAa": Node(payoff=(3, 3)), "aAd": Node(payoff=(3, 2)),
        "aDa": Node(payoff=(4, 2)), "aDd": Node(payoff=(4, 2)),
        "dA": Node(payoff=(1, 2)), "dD": Node(payoff=(1, 3)),
    }
    return GameTree(n, "root")


FIGURE1_TREE = _figure1_tree()


def figure1_strategy(player: int, label: str) -> Strategy:
    if player == 1:
        if label not in FIGURE1_NORMAL.strategies[0]:
            raise DomainError(f"unknown player-1 strategy {label!r}")
        return Strategy({"1.first": label[0], "1.second": label[1]}, label)
    if label not in FIGURE1_NORMAL.strategies[1]:
        raise DomainError(f"unknown player-2 strategy {label!r}")
    return Strategy({"2": label}, label)


# Illustrative payoffs; the original figure's values are not available.
DEFAULT_RECALL_PAYOFFS = {"x1:S": 4, "x2:S": 1, "x3:L": 8, "x3:R": 0, "x4:L": 0, "x4:R": 6}


def imperfect_recall_tree(payoffs: Mapping | None = None) -> GameTree:
    p = dict(DEFAULT_RECALL_PAYOFFS)
    p.update(payoffs or {})
    n = {
        "root": Node(NATURE, (("x1", "x1"), ("x2", "x2"))),
        "x1": Node(1, (("S", "x1S"), ("B", "x3")), infoset="x1"),
        "x2": Node(1, (("S", "x2S"), ("B", "x4")), infoset="x2"),
        "x3": Node(1, (("L", "x3L"), ("R", "x3R")), infoset="X"),
        "x4": Node(1, (("L", "x4L"), ("R", "x4R")), infoset="X"),
        "x1S": Node(payoff=(p["x1:S"],)), "x2S": Node(payoff=(p["x2:S"],)),
        "x3L": Node(payoff=(p["x3:L"],)), "x3R": Node(payoff=(p["x3:R"],)),
        "x4L": Node(payoff=(p["x4:L"],)), "x4R": Node(payoff=(p["x4:R"],)),
    }
    return GameTree(n, "root")


STRATEGY_F = Strategy({"x1": "S", "x2": "B", "X": "R"}, "f")
STRATEGY_F_PRIME = Strategy({"x1": "B", "x2": "S", "X": "L"}, "f'")


def expected_utility(tree: GameTree, strategy: Strategy, nature_probs: Mapping[str, float],
                     switch: Mapping | None = None) -> float:
    total = 0.0
    for choice, prob in nature_probs.items():
        _, payoff, _ = simulate_play(tree, {1: strategy}, [choice], switch)
        total += prob * payoff[0]
    return total


def _nature_choices(tree: GameTree) -> list[list[str]]:
    root = tree.nodes[tree.root]
    if root.owner != NATURE:
        return [[]]
    return [[label] for label, _ in root.actions]


def _pad(states: list, horizon: int) -> tuple:
    out = list(states)
    while len(out) < horizon + 1:
        last = out[-1]
        out.append(GlobalState(last.env, tuple(s.replace(time=len(out)) for s in last.locals)))
    return tuple(out)


def imperfect_recall_system(tree: GameTree, base: Strategy, switch: Mapping | None = None,
                            switch_aware: bool = False, player: int = 1) -> System:
    """One run per nature choice, with the agent's local state built from its information set.

    With ``switch_aware`` the local state also carries the label of the
    strategy currently in force.
    """
    if not tree.has_imperfect_recall(player):
        raise ModelError("tree has no information set with imperfect recall")
    plays = [simulate_play(tree, {player: base}, nature, switch) for nature in _nature_choices(tree)]
    reached = {nid for _, _, visited in plays for nid, _ in visited}
    for nid in switch or {}:
        if nid not in reached:
            raise ModelError(f"switch plan references unreachable node {nid!r}")
    horizon = max(len(v) for _, _, v in plays) - 1
    runs = []
    for terminal, payoff, visited in plays:
        states = []
        for m, (nid, labels) in enumerate(visited):
            node = tree.nodes[nid]
            info = node.infoset if node.owner == player else ("end" if node.terminal else "start")
            atoms = {"time": m, "info": info}
            if switch_aware:
                atoms["strategy"] = (labels or {}).get(player, base.name)
                if switch and nid in switch and not node.terminal:
                    atoms["strategy"] = switch[nid].name
            env = LocalState(node=nid, payoff=node.payoff)
            states.append(GlobalState(env, (LocalState(atoms),)))
        runs.append(Run(_pad(states, horizon), witness=nid))
    return System(runs, horizon=horizon, n=1)


def at_node(sys: System, nid: str) -> Event:
    return sys.event(f"at-{nid}", lambda s, p: s.env(p)["node"] == nid)


@dataclass
class StateSpaceModel:
    states: tuple
    profile: Mapping  # state -> (player-1 label, player-2 label)
    partitions: Mapping  # player -> list of cells
    game: GameTree | None = None
    strategy_of: Any = None  # (player, label) -> Strategy
    players: tuple = (1, 2)
    names: dict = field(default_factory=dict)

    def __post_init__(self):
        self.states = tuple(self.states)
        self.partitions = {p: [frozenset(c) for c in cells] for p, cells in self.partitions.items()}
        self.validate()

    def validate(self):
        universe = set(self.states)
        if set(self.profile) != universe:
            raise ModelError("every state needs exactly one strategy profile")
        for player, cells in self.partitions.items():
            covered = [w for c in cells for w in c]
            if sorted(covered) != sorted(universe):
                raise ModelError(f"player {player}'s cells do not partition the state space")
            idx = self.players.index(player)
            for cell in cells:
                own = {self.profile[w][idx] for w in cell}
                if len(own) > 1:
                    raise ModelError(f"player {player} follows different strategies within cell {sorted(cell)}")

    def cell(self, player, state) -> frozenset:
        return next(c for c in self.partitions[player] if state in c)

    @classmethod
    def from_dict(cls, d: dict) -> "StateSpaceModel":
        states, profile, cells = [], {}, {1: {}, 2: {}}
        for row in d["states"]:
            w = row["state"]
            states.append(w)
            profile[w] = tuple(row["profile"])
            for player, tag in enumerate(row["cells"], start=1):
                cells[player].setdefault(tag, set()).add(w)
        return cls(tuple(states), profile, {p: list(c.values()) for p, c in cells.items()},
                   game=FIGURE1_TREE, strategy_of=figure1_strategy)


# Player 1's cells are drawn as ellipses and player 2's as rectangles; the
# cells below are the ones consistent with the facts stated about them.
FIGURE3 = StateSpaceModel(
    states=("w1", "w2", "w3", "w4", "w5"),
    profile={"w1": ("aa", "A"), "w2": ("aa", "D"), "w3": ("ad", "A"), "w4": ("ad", "D"), "w5": ("aa", "A")},
    partitions={1: [{"w1", "w2"}, {"w3", "w4"}, {"w5"}], 2: [{"w1", "w3"}, {"w2", "w4"}, {"w5"}]},
    game=FIGURE1_TREE,
    strategy_of=figure1_strategy,
)


def build_state_space_system(m: StateSpaceModel) -> System:
    """One run per state; the play follows the state's profile through the game tree.

    An agent's local state is the time, its strategy and the cell of states it
    considers possible.
    """
    m.validate()
    plays = {}
    for w in m.states:
        if m.game is not None:
            profile = {p: m.strategy_of(p, label) for p, label in zip(m.players, m.profile[w])}
            _, _, visited = simulate_play(m.game, profile)
            plays[w] = [nid for nid, _ in visited]
        else:
            plays[w] = ["start"]
    horizon = max(1, max(len(v) for v in plays.values()) - 1)
    runs = []
    for w in m.states:
        nodes = plays[w]
        states = []
        for t in range(horizon + 1):
            nid = nodes[min(t, len(nodes) - 1)]
            payoff = m.game.nodes[nid].payoff if m.game is not None else None
            env = LocalState(state=w, profile=m.profile[w], node=nid, payoff=payoff)
            locals_ = tuple(
                LocalState(time=t, strategy=m.profile[w][i], cell=m.cell(p, w))
                for i, p in enumerate(m.players)
            )
            states.append(GlobalState(env, locals_))
        runs.append(Run(tuple(states), witness=w))
    return System(runs, horizon=horizon, n=len(m.players))


def profile_event(sys: System, profile: Sequence[str]) -> Event:
    target = tuple(profile)
    return sys.event(f"profile={target}", lambda s, p: s.env(p)["profile"] == target)


def state_run(sys: System, state: str) -> int:
    for ri, run in enumerate(sys.runs):
        if run.witness == state:
            return ri
    raise DomainError(f"no run for state {state!r}")
