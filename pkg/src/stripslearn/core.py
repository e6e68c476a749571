"""Propositional STRIPS domains, progression, and the trace-consistency oracle.

A domain is a set of atoms plus a set of actions with precondition, add and
delete lists. Traces are sequences of action indices (0-based). A trace is
internally consistent when every precondition of every action is either never
touched by an earlier action or was last made true; no initial state is
involved. The oracle tracks, per atom, whether the most recent affecting
action added or deleted it (a last-writer table) and flags every position
whose preconditions are violated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

Trace = tuple[int, ...]
State = frozenset[str]


@dataclass(frozen=True)
class Action:
    """A ground action with precondition, add and delete atom sets."""

    name: str
    pre: frozenset[str]
    add: frozenset[str]
    delete: frozenset[str]

    @staticmethod
    def make(name: str, pre: Iterable[str] = (), add: Iterable[str] = (),
             delete: Iterable[str] = ()) -> "Action":
        return Action(name, frozenset(pre), frozenset(add), frozenset(delete))


@dataclass(frozen=True)
class Domain:
    """A propositional STRIPS action model: named atoms and ground actions.

    The order of `atoms` and `actions` is meaningful: it fixes the indices
    used by traces, compiled programs and parameter tensors.
    """

    name: str
    atoms: tuple[str, ...]
    actions: tuple[Action, ...]

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def atom_index(self, name: str) -> int:
        return self.atoms.index(name)

    def action_index(self, name: str) -> int:
        for i, a in enumerate(self.actions):
            if a.name == name:
                return i
        raise ValueError(f"unknown action name: {name!r}")

    def trace_from_names(self, names: Sequence[str]) -> Trace:
        return tuple(self.action_index(n) for n in names)

    def trace_to_names(self, trace: Sequence[int]) -> tuple[str, ...]:
        return tuple(self.actions[m].name for m in trace)


@dataclass(frozen=True)
class TraceVerdict:
    """Oracle output: overall label plus one flag per trace position.

    label is 0 for an internally consistent (positive) trace and 1 otherwise;
    flags[i] is 1 iff the action at position i violates one of its
    preconditions given the prefix before it. The first position is never
    flagged, and label == OR(flags).
    """

    label: int
    flags: tuple[int, ...]


class WriterTable:
    """Last-writer bookkeeping: which action most recently affected each atom.

    An atom is untouched until some action adds or deletes it; afterwards its
    status records the sign of the most recent effect. An atom occurring in
    both the add and delete list of one action counts as deleted (progression
    applies the set difference last).
    """

    __slots__ = ("_last",)

    def __init__(self) -> None:
        self._last: dict[str, bool] = {}

    def status(self, atom: str) -> str:
        made_true = self._last.get(atom)
        if made_true is None:
            return "untouched"
        return "last-made-true" if made_true else "last-made-false"

    def violates(self, action: Action) -> bool:
        """True iff some precondition of `action` was last made false."""
        last = self._last
        return any(last.get(p) is False for p in action.pre)

    def update(self, action: Action) -> None:
        last = self._last
        for p in action.add:
            last[p] = True
        for p in action.delete:
            last[p] = False


def validate_domain(d: Domain) -> None:
    """Check domain invariants; raises ValueError naming the offender."""
    seen_atoms: set[str] = set()
    for p in d.atoms:
        if p in seen_atoms:
            raise ValueError(f"duplicate atom name: {p!r}")
        seen_atoms.add(p)
    seen_actions: set[str] = set()
    for a in d.actions:
        if a.name in seen_actions:
            raise ValueError(f"duplicate action name: {a.name!r}")
        seen_actions.add(a.name)
        for group, atoms in (("pre", a.pre), ("add", a.add), ("del", a.delete)):
            for p in atoms:
                if p not in seen_atoms:
                    raise ValueError(
                        f"action {a.name!r} references unknown atom {p!r} in {group}")


def _check_indices(d: Domain, trace: Sequence[int]) -> None:
    for m in trace:
        if not 0 <= m < d.n_actions:
            raise ValueError(f"action index {m} out of range [0, {d.n_actions})")


def apply(d: Domain, s: State, m: int) -> State:
    """Progress state `s` through action index `m`: (s | add) - delete.

    Applicability is not checked; the caller decides whether it matters.
    """
    _check_indices(d, (m,))
    a = d.actions[m]
    return frozenset((s | a.add) - a.delete)


def classify_trace(d: Domain, trace: Sequence[int]) -> TraceVerdict:
    """Label a trace by internal consistency, flagging every bad position.

    A single left-to-right scan: position i is flagged iff some precondition
    of its action was last made false by an earlier action. Flagged actions
    still update the last-writer table, so later violations are detected too.
    """
    _check_indices(d, trace)
    writers = WriterTable()
    flags = []
    for m in trace:
        a = d.actions[m]
        flags.append(1 if writers.violates(a) else 0)
        writers.update(a)
    return TraceVerdict(label=max(flags, default=0), flags=tuple(flags))


def possible_next(d: Domain, prefix: Sequence[int]) -> set[int]:
    """Action indices that can consistently extend a positive prefix."""
    verdict = classify_trace(d, prefix)
    if verdict.label != 0:
        raise ValueError("prefix is not a positive trace")
    writers = WriterTable()
    for m in prefix:
        writers.update(d.actions[m])
    return {m for m, a in enumerate(d.actions) if not writers.violates(a)}
