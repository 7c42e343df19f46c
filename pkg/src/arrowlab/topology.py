"""Branching topology of finite transition systems, and a two-outcome
spin experiment that realizes the both-ways-branching case.

A system is classified by whether any state has two or more outgoing edges
(forward branching) and whether any state has two or more incoming edges
(backward branching):

    neither -> I, forward only -> V, backward only -> LAMBDA, both -> X

A single state with a self-loop is deterministic both ways and classifies
as I.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError
from .rng import RngStream


class Topology(Enum):
    I = "I"
    V = "V"
    LAMBDA = "LAMBDA"
    X = "X"

    @property
    def label(self) -> str:
        return self.value


@dataclass(frozen=True)
class TransitionSystem:
    """Finite set of labeled states with a forward edge relation.

    Probabilities are optional; when any outgoing edge of a state carries
    one, all of them must, and they must sum to 1.
    """

    states: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    probabilities: dict[tuple[str, str], float] | None = None

    def __post_init__(self):
        if len(set(self.states)) != len(self.states):
            raise DomainError("duplicate state labels")
        if len(set(self.edges)) != len(self.edges):
            raise DomainError("duplicate edges; the relation is a set of pairs")
        known = set(self.states)
        for src, dst in self.edges:
            if src not in known or dst not in known:
                raise DomainError(f"edge ({src}, {dst}) references unknown state")
        touched = {s for e in self.edges for s in e}
        for state in self.states:
            if state not in touched:
                raise DomainError(f"state {state!r} appears in no edge")
        if self.probabilities is not None:
            self._check_probabilities()

    def _check_probabilities(self):
        probs = self.probabilities
        for edge in probs:
            if edge not in set(self.edges):
                raise DomainError(f"probability on unknown edge {edge}")
        by_src: dict[str, list[tuple[str, str]]] = {}
        for edge in self.edges:
            by_src.setdefault(edge[0], []).append(edge)
        for src, out_edges in by_src.items():
            with_p = [e for e in out_edges if e in probs]
            if not with_p:
                continue
            if len(with_p) != len(out_edges):
                raise DomainError(
                    f"state {src!r} mixes weighted and unweighted edges")
            total = sum(probs[e] for e in out_edges)
            if abs(total - 1.0) > 1e-12:
                raise DomainError(
                    f"outgoing probabilities of {src!r} sum to {total}, not 1")


def classify(ts: TransitionSystem) -> Topology:
    """Branching-structure classification."""
    if not ts.states or not ts.edges:
        raise DomainError("cannot classify an empty transition system")
    out_count: dict[str, int] = {}
    in_count: dict[str, int] = {}
    for src, dst in ts.edges:
        out_count[src] = out_count.get(src, 0) + 1
        in_count[dst] = in_count.get(dst, 0) + 1
    forward = any(c >= 2 for c in out_count.values())
    backward = any(c >= 2 for c in in_count.values())
    if forward and backward:
        return Topology.X
    if forward:
        return Topology.V
    if backward:
        return Topology.LAMBDA
    return Topology.I


def reverse(ts: TransitionSystem) -> TransitionSystem:
    """Transpose every edge. Probabilities are dropped: forward weights do
    not define retrodiction weights."""
    return TransitionSystem(states=ts.states,
                            edges=tuple((dst, src) for src, dst in ts.edges),
                            probabilities=None)


def branching_diagnostics(ts: TransitionSystem) -> dict:
    out_count: dict[str, int] = {}
    in_count: dict[str, int] = {}
    for src, dst in ts.edges:
        out_count[src] = out_count.get(src, 0) + 1
        in_count[dst] = in_count.get(dst, 0) + 1
    return {
        "max_out_degree": max(out_count.values(), default=0),
        "max_in_degree": max(in_count.values(), default=0),
        "forward_branching": any(c >= 2 for c in out_count.values()),
        "backward_branching": any(c >= 2 for c in in_count.values()),
    }


def transition_system_from_dict(data: dict) -> TransitionSystem:
    """Ingest {"states": [...], "edges": [[from, to, prob?], ...]}."""
    if not isinstance(data, dict):
        raise DomainError("transition system must be a JSON object")
    unknown = set(data) - {"states", "edges"}
    if unknown:
        raise DomainError(f"unknown transition-system fields {sorted(unknown)}")
    try:
        states = tuple(str(s) for s in data["states"])
        raw_edges = list(data["edges"])
    except (KeyError, TypeError) as exc:
        raise DomainError("transition system needs 'states' and 'edges'") from exc
    edges = []
    probs: dict[tuple[str, str], float] = {}
    for entry in raw_edges:
        if len(entry) == 2:
            edges.append((str(entry[0]), str(entry[1])))
        elif len(entry) == 3:
            edge = (str(entry[0]), str(entry[1]))
            edges.append(edge)
            probs[edge] = float(entry[2])
        else:
            raise DomainError(f"edge {entry!r} must be [from, to] or [from, to, p]")
    return TransitionSystem(states=states, edges=tuple(edges),
                            probabilities=probs or None)


def transition_system_from_json(path) -> TransitionSystem:
    with open(path) as f:
        return transition_system_from_dict(json.load(f))


def transition_system_to_dict(ts: TransitionSystem) -> dict:
    edges = []
    for edge in ts.edges:
        if ts.probabilities and edge in ts.probabilities:
            edges.append([edge[0], edge[1], ts.probabilities[edge]])
        else:
            edges.append([edge[0], edge[1]])
    return {"states": list(ts.states), "edges": edges}


# --- spin-1/2 sequential measurement experiment ------------------------------

SOURCE_X_PLUS = "S_xplus"
SOURCE_X_MINUS = "P_xminus"
DETECTOR_Z_PLUS = "A_zplus"
DETECTOR_Z_MINUS = "B_zminus"
RETURNS_TO_SOURCE = "returns_to_S_xplus"
DEFLECTS_TO_P = "deflects_to_P_xminus"

_SQRT_HALF = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class SpinState:
    """Two complex amplitudes in the z basis, unit norm."""

    up: complex
    down: complex

    def __post_init__(self):
        norm = abs(self.up) ** 2 + abs(self.down) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"spin state norm^2 = {norm}, not 1")


Z_PLUS = SpinState(1.0 + 0j, 0.0 + 0j)
Z_MINUS = SpinState(0.0 + 0j, 1.0 + 0j)
X_PLUS = SpinState(_SQRT_HALF + 0j, _SQRT_HALF + 0j)
X_MINUS = SpinState(_SQRT_HALF + 0j, -_SQRT_HALF + 0j)


def measure_spin(state: SpinState, basis: str,
                 rng: RngStream) -> tuple[int, SpinState]:
    """Projective measurement in the z or x basis.

    Returns (+1 or -1, collapsed eigenstate). Eigenstates of the measured
    basis collapse deterministically onto themselves.
    """
    if basis == "z":
        plus, minus = Z_PLUS, Z_MINUS
        amp_plus = state.up
    elif basis == "x":
        plus, minus = X_PLUS, X_MINUS
        amp_plus = _SQRT_HALF * (state.up + state.down)
    else:
        raise DomainError(f"unknown basis {basis!r}")
    p_plus = abs(amp_plus) ** 2
    if rng.uniform() < p_plus:
        return 1, plus
    return -1, minus


@dataclass(frozen=True)
class SgOutcome:
    source: str
    detector: str
    post_state: SpinState


def sg_forward(source: str, rng: RngStream) -> SgOutcome:
    """Send one spin from a source through a z-splitting analyzer."""
    if source == SOURCE_X_PLUS:
        prepared = X_PLUS
    elif source == SOURCE_X_MINUS:
        prepared = X_MINUS
    else:
        raise DomainError(f"unknown source {source!r}")
    outcome, post = measure_spin(prepared, "z", rng)
    detector = DETECTOR_Z_PLUS if outcome == 1 else DETECTOR_Z_MINUS
    return SgOutcome(source=source, detector=detector, post_state=post)


def sg_reverse(outcome: SgOutcome, rng: RngStream) -> str:
    """Run the collapsed spin back through the x analyzer."""
    result, _ = measure_spin(outcome.post_state, "x", rng)
    return RETURNS_TO_SOURCE if result == 1 else DEFLECTS_TO_P


def sg_transition_system(n_trials: int, rng: RngStream) -> TransitionSystem:
    """Aggregate forward runs from both sources into one transition system
    with empirical branching probabilities."""
    if n_trials < 1:
        raise DomainError("need at least one trial")
    counts: dict[tuple[str, str], int] = {}
    for source in (SOURCE_X_PLUS, SOURCE_X_MINUS):
        for _ in range(n_trials):
            out = sg_forward(source, rng)
            counts[(source, out.detector)] = counts.get((source, out.detector), 0) + 1
    states = (SOURCE_X_PLUS, SOURCE_X_MINUS, DETECTOR_Z_PLUS, DETECTOR_Z_MINUS)
    edges = tuple(sorted(counts))
    probs = {edge: counts[edge] / n_trials for edge in edges}
    return TransitionSystem(states=states, edges=edges, probabilities=probs)
