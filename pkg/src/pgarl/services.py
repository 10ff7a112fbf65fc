"""Stateful reply services and the use operator.

A service answers co-actions addressed to it through a focus: each step maps
the current state and a co-action to a boolean reply and a successor state.
Applying a service to a thread (the use operator) consumes every action on
the bound focus silently, branching on the service's reply; actions on other
foci pass through, a co-action outside the service's alphabet deadlocks, and
a cycle of consumed actions that never emits anything is deadlock as well.
"""

from __future__ import annotations

from dataclasses import dataclass

from .extraction import extract_pgau
from .program import CanonicalProgram
from .threads import (
    DEADLOCK,
    STOP,
    STATUS_CUTOFF,
    STATUS_DEADLOCK,
    STATUS_STOP,
    Action,
    Branch,
    BranchRef,
    Deadlock,
    FiniteThread,
    LinearSpec,
    ReplyScript,
    SpecRhs,
    Stop,
    Trace,
    _require_valid,
)

SILENT_RUN_LIMIT = 10**6


class ServiceError(ValueError):
    """A service cannot be used the way it was asked to."""


class DivergenceSuspected(RuntimeError):
    """The silent-step budget ran out before the thread produced anything."""


@dataclass(frozen=True)
class CoAction:
    """A method request as seen by a service: name plus optional argument."""

    method: str
    argument: int | None = None

    def __str__(self) -> str:
        return self.method if self.argument is None else f"{self.method}:{self.argument}"


class Service:
    """Interface: an initial state, a reply function, and an alphabet test.

    ``states`` enumerates every reachable state when the service is finite,
    and is None otherwise. States are immutable snapshots; ``step`` returns
    the successor rather than mutating.
    """

    initial: object

    @property
    def states(self) -> tuple | None:
        return None

    def accepts(self, co: CoAction) -> bool:
        raise NotImplementedError

    def step(self, state, co: CoAction) -> tuple[bool, object]:
        raise NotImplementedError


@dataclass(frozen=True)
class DownCounter(Service):
    """Bounded counter: ``dec`` replies true and decrements while positive,
    false at zero (leaving it at zero); ``set:n`` replies true and loads n.
    Values above ``limit`` are outside the alphabet."""

    initial: int = 0
    limit: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.initial <= self.limit:
            raise ValueError("initial counter value must lie within 0..limit")

    @property
    def states(self) -> tuple:
        return tuple(range(self.limit + 1))

    @property
    def alphabet(self) -> tuple[CoAction, ...]:
        return (CoAction("dec"),) + tuple(CoAction("set", n) for n in range(self.limit + 1))

    def accepts(self, co: CoAction) -> bool:
        if co.method == "dec":
            return co.argument is None
        if co.method == "set":
            return co.argument is not None and 0 <= co.argument <= self.limit
        return False

    def step(self, state: int, co: CoAction) -> tuple[bool, int]:
        if co.method == "dec":
            return (True, state - 1) if state > 0 else (False, 0)
        return True, co.argument


@dataclass(frozen=True)
class FullCounter(Service):
    """Unbounded counter: like the down counter but with ``inc`` (always
    true) and no cap on ``set``; it has no finite state enumeration."""

    initial: int = 0

    def __post_init__(self) -> None:
        if self.initial < 0:
            raise ValueError("counter value must be a natural number")

    def accepts(self, co: CoAction) -> bool:
        if co.method in ("dec", "inc"):
            return co.argument is None
        if co.method == "set":
            return co.argument is not None and co.argument >= 0
        return False

    def step(self, state: int, co: CoAction) -> tuple[bool, int]:
        if co.method == "inc":
            return True, state + 1
        if co.method == "dec":
            return (True, state - 1) if state > 0 else (False, 0)
        return True, co.argument


def down_counter(initial: int = 0, max: int = 0) -> DownCounter:
    """A down counter holding values 0..max; fresh counters start at zero."""
    if initial > max:
        raise ValueError("initial value exceeds the counter maximum")
    return DownCounter(initial, max)


def full_counter(initial: int = 0) -> FullCounter:
    """An unbounded counter; the optional initial value defaults to zero."""
    return FullCounter(initial)


@dataclass(frozen=True)
class ProjectedProgram:
    """A program together with the services its foci are bound to."""

    program: CanonicalProgram
    bindings: tuple[tuple[str, Service], ...] = ()

    def __post_init__(self) -> None:
        foci = [focus for focus, _ in self.bindings]
        if len(set(foci)) != len(foci):
            raise ValueError("binding foci must be pairwise distinct")


def _co_action(action: Action) -> CoAction:
    return CoAction(action.method, action.argument)


def _silent_resolve(spec: LinearSpec, focus: str, svc: Service, state, equation: int, budget=None):
    """Run consumed (silent) service steps until the thread emits, ends, or
    silently cycles; returns ("S",), ("D",) or ("node", equation, state)."""
    seen = set()
    while True:
        key = (equation, state)
        if key in seen:
            return ("D",)
        seen.add(key)
        if budget is not None:
            if budget[0] <= 0:
                raise DivergenceSuspected(
                    f"no visible progress within {SILENT_RUN_LIMIT} consumed steps"
                )
            budget[0] -= 1
        rhs = spec.rhs(equation)
        if isinstance(rhs, Stop):
            return ("S",)
        if isinstance(rhs, Deadlock):
            return ("D",)
        if rhs.action.focus != focus:
            return ("node", equation, state)
        co = _co_action(rhs.action)
        if not svc.accepts(co):
            return ("D",)
        reply, state = svc.step(state, co)
        equation = rhs.yes if reply else rhs.no


def apply_use_finite(spec: LinearSpec, focus: str, svc: Service) -> LinearSpec:
    """Product construction of a thread with a finite-state service: one
    equation per reachable (thread state, service state) pair that performs a
    visible action, plus shared terminal equations. The result has at most
    len(spec) * len(svc.states) branch equations."""
    _require_valid(spec)
    if svc.states is None:
        raise ServiceError("service has no finite state enumeration; use the bounded form")
    root = _silent_resolve(spec, focus, svc, svc.initial, spec.root)
    if root[0] == "S":
        return LinearSpec((STOP,), 1)
    if root[0] == "D":
        return LinearSpec((DEADLOCK,), 1)

    index = {root[1:]: 1}
    order = [root[1:]]
    rows = []
    cursor = 0
    while cursor < len(order):
        equation, state = order[cursor]
        cursor += 1
        rhs = spec.rhs(equation)
        assert isinstance(rhs, BranchRef)
        yes = _silent_resolve(spec, focus, svc, state, rhs.yes)
        no = _silent_resolve(spec, focus, svc, state, rhs.no)
        rows.append((rhs.action, yes, no))
        for outcome in (yes, no):
            if outcome[0] == "node" and outcome[1:] not in index:
                index[outcome[1:]] = len(order) + 1
                order.append(outcome[1:])

    terminals: dict[str, int] = {}

    def ref(outcome) -> int:
        if outcome[0] == "node":
            return index[outcome[1:]]
        if outcome[0] not in terminals:
            terminals[outcome[0]] = len(order) + len(terminals) + 1
        return terminals[outcome[0]]

    equations: list[SpecRhs] = [
        BranchRef(ref(yes), action, ref(no)) for action, yes, no in rows
    ]
    for status, _ in sorted(terminals.items(), key=lambda item: item[1]):
        equations.append(STOP if status == "S" else DEADLOCK)
    return LinearSpec(tuple(equations), 1)


def apply_use_bounded(spec: LinearSpec, focus: str, svc: Service, depth: int) -> FiniteThread:
    """Depth approximation of a thread using a service, explored on the fly.

    Works for services without a finite enumeration. Consumed steps do not
    count toward the visible depth but are limited by an internal budget of
    depth * (1 + 10**6) steps; running out raises DivergenceSuspected.
    """
    _require_valid(spec)
    budget = [depth * (1 + SILENT_RUN_LIMIT)]
    memo: dict = {}

    def build(equation: int, state, remaining: int) -> FiniteThread:
        if remaining == 0:
            return DEADLOCK
        key = (equation, state, remaining)
        hit = memo.get(key)
        if hit is not None:
            return hit
        outcome = _silent_resolve(spec, focus, svc, state, equation, budget)
        if outcome[0] == "S":
            result: FiniteThread = STOP
        elif outcome[0] == "D":
            result = DEADLOCK
        else:
            _, at_equation, at_state = outcome
            rhs = spec.rhs(at_equation)
            assert isinstance(rhs, BranchRef)
            result = Branch(
                build(rhs.yes, at_state, remaining - 1),
                rhs.action,
                build(rhs.no, at_state, remaining - 1),
            )
        memo[key] = result
        return result

    return build(spec.root, svc.initial, depth)


def apply_bindings(projected: ProjectedProgram) -> LinearSpec:
    """Extract the program's thread, then apply each bound service in order
    (leftmost binding first). All bound services must be finite-state."""
    spec = extract_pgau(projected.program)
    for focus, svc in projected.bindings:
        spec = apply_use_finite(spec, focus, svc)
    return spec


def simulate_with_services(
    spec: LinearSpec,
    bindings: tuple[tuple[str, Service], ...],
    script: ReplyScript,
    max_steps: int = 1000,
) -> Trace:
    """Scripted simulation with live services: actions on bound foci are
    answered by their service and do not appear in the trace or consume the
    script; every other action consumes one scripted reply. Works for
    services with or without a finite enumeration."""
    _require_valid(spec)
    services = dict(bindings)
    states = {focus: svc.initial for focus, svc in bindings}
    equation = spec.root
    steps: list[tuple[Action, bool]] = []
    cursor = script.cursor
    while True:
        seen = set()
        while True:  # silent run
            rhs = spec.rhs(equation)
            if isinstance(rhs, (Stop, Deadlock)) or rhs.action.focus not in services:
                break
            key = (equation, tuple(sorted(states.items())))
            if key in seen:
                return Trace(tuple(steps), STATUS_DEADLOCK)
            seen.add(key)
            if len(seen) > SILENT_RUN_LIMIT:
                raise DivergenceSuspected(
                    f"no visible progress within {SILENT_RUN_LIMIT} consumed steps"
                )
            svc = services[rhs.action.focus]
            co = _co_action(rhs.action)
            if not svc.accepts(co):
                return Trace(tuple(steps), STATUS_DEADLOCK)
            reply, states[rhs.action.focus] = svc.step(states[rhs.action.focus], co)
            equation = rhs.yes if reply else rhs.no
        if isinstance(rhs, Stop):
            return Trace(tuple(steps), STATUS_STOP)
        if isinstance(rhs, Deadlock):
            return Trace(tuple(steps), STATUS_DEADLOCK)
        if len(steps) >= max_steps or cursor >= len(script.values):
            return Trace(tuple(steps), STATUS_CUTOFF)
        reply = script.values[cursor]
        cursor += 1
        steps.append((rhs.action, reply))
        equation = rhs.yes if reply else rhs.no
