"""Regular threads as finite linear recursive specifications.

A thread describes the behavior of a program under execution: a tree whose
internal nodes carry an action (a request to the environment, answered with a
boolean reply that selects the continuation) and whose leaves are successful
termination or deadlock. Threads with finitely many distinct states are
*regular* and are represented here by a :class:`LinearSpec`, a numbered list
of equations whose right-hand sides are termination, deadlock, or a single
branch on an action.

The module provides the depth approximation operator :func:`pi`, the
refinement order and equality on regular threads (:func:`refines`,
:func:`thread_equal`), a distinguishing-trace search (:func:`distinguish`)
and scripted simulation (:func:`simulate_thread`).
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from typing import Union

_METHOD_RE = re.compile(r"[a-z][a-z0-9_]*\Z")
_FOCUS_RE = re.compile(r"[a-z][a-z0-9_]*(:[0-9]+)?\Z")

STATUS_STOP = "S"
STATUS_DEADLOCK = "D"
STATUS_CUTOFF = "cutoff"


class SpecError(ValueError):
    """An operation was applied to an invalid specification or state index."""


@dataclass(frozen=True)
class Action:
    """One action: an optional focus (channel), a method name, and an
    optional natural-number argument (only meaningful with a focus, as in
    ``rlc:6.set:3``)."""

    method: str
    focus: str | None = None
    argument: int | None = None

    def __post_init__(self) -> None:
        if not _METHOD_RE.match(self.method):
            raise ValueError(f"bad method identifier {self.method!r}")
        if self.focus is not None and not _FOCUS_RE.match(self.focus):
            raise ValueError(f"bad focus identifier {self.focus!r}")
        if self.argument is not None:
            if self.argument < 0:
                raise ValueError("action argument must be a natural number")
            if self.focus is None:
                raise ValueError("an action argument requires a focus.method action")

    def __str__(self) -> str:
        text = self.method if self.focus is None else f"{self.focus}.{self.method}"
        if self.argument is not None:
            text = f"{text}:{self.argument}"
        return text


class FiniteThread:
    """Base class for finite thread trees."""


@dataclass(frozen=True)
class Stop(FiniteThread):
    """Successful termination."""

    def __str__(self) -> str:
        return "S"


@dataclass(frozen=True)
class Deadlock(FiniteThread):
    """Inaction: no further behavior."""

    def __str__(self) -> str:
        return "D"


@dataclass(frozen=True)
class Branch(FiniteThread):
    """Branch on the reply to ``action``: ``yes`` on true, ``no`` on false."""

    yes: FiniteThread
    action: Action
    no: FiniteThread


STOP = Stop()
DEADLOCK = Deadlock()


def prefixed(action: Action, thread: FiniteThread) -> Branch:
    """Action prefixing: perform ``action``, ignore the reply, continue as
    ``thread``."""
    return Branch(thread, action, thread)


@dataclass(frozen=True)
class BranchRef:
    """Right-hand side of a linear equation: branch on ``action`` to the
    equations numbered ``yes`` / ``no``."""

    yes: int
    action: Action
    no: int


SpecRhs = Union[Stop, Deadlock, BranchRef]


@dataclass(frozen=True)
class LinearSpec:
    """A finite linear recursive specification: equations indexed 1..n, each
    right-hand side one of Stop, Deadlock, or a BranchRef, plus the index of
    the distinguished root equation.

    The constructor is permissive; :func:`validate_spec` reports invariant
    violations.
    """

    equations: tuple[SpecRhs, ...]
    root: int = 1

    def rhs(self, index: int) -> SpecRhs:
        return self.equations[index - 1]

    def __len__(self) -> int:
        return len(self.equations)


def validate_spec(spec: LinearSpec) -> list[str]:
    """Report every invariant violation; an empty list means the spec is
    well formed. Never raises."""
    problems = []
    n = len(spec.equations)
    if n < 1:
        problems.append("specification has no equations")
    if not 1 <= spec.root <= max(n, 1):
        problems.append(f"root {spec.root} out of range 1..{n}")
    for i, rhs in enumerate(spec.equations, 1):
        if isinstance(rhs, BranchRef):
            for ref in (rhs.yes, rhs.no):
                if not 1 <= ref <= n:
                    problems.append(f"dangling index {ref} in equation {i}")
        elif not isinstance(rhs, (Stop, Deadlock)):
            problems.append(f"equation {i} has an unrecognized right-hand side")
    return problems


def _require_valid(spec: LinearSpec) -> None:
    problems = validate_spec(spec)
    if problems:
        raise SpecError("; ".join(problems))


def pi(n: int, spec: LinearSpec, state: int) -> FiniteThread:
    """Depth approximation: cut the unfolding of equation ``state`` at depth
    ``n``, replacing everything deeper by deadlock. Depth 0 is deadlock;
    termination and deadlock survive any positive depth.

    Subtrees are shared, so the result is a DAG of at most n * len(spec)
    distinct nodes.
    """
    _require_valid(spec)
    if not 1 <= state <= len(spec.equations):
        raise SpecError(f"state {state} out of range 1..{len(spec.equations)}")
    level: dict[int, FiniteThread] = {i: DEADLOCK for i in range(1, len(spec.equations) + 1)}
    for _ in range(n):
        nxt: dict[int, FiniteThread] = {}
        for i, rhs in enumerate(spec.equations, 1):
            if isinstance(rhs, Stop):
                nxt[i] = STOP
            elif isinstance(rhs, Deadlock):
                nxt[i] = DEADLOCK
            else:
                nxt[i] = Branch(level[rhs.yes], rhs.action, level[rhs.no])
        level = nxt
    return level[state]


def pi_thread(n: int, thread: FiniteThread) -> FiniteThread:
    """The same depth cut applied directly to a finite thread tree."""
    memo: dict[tuple[int, int], FiniteThread] = {}

    def cut(k: int, t: FiniteThread) -> FiniteThread:
        if k == 0:
            return DEADLOCK
        if not isinstance(t, Branch):
            return t
        key = (k, id(t))
        hit = memo.get(key)
        if hit is None:
            hit = Branch(cut(k - 1, t.yes), t.action, cut(k - 1, t.no))
            memo[key] = hit
        return hit

    return cut(n, thread)


def finite_leq(left: FiniteThread, right: FiniteThread) -> bool:
    """Refinement order on finite threads: deadlock refines everything,
    termination only termination, and branches must agree on the action and
    refine componentwise.

    Comparison is memoized on node identity so shared (DAG) trees compare in
    time proportional to the number of distinct node pairs.
    """
    memo: dict[tuple[int, int], bool] = {}

    def go(a: FiniteThread, b: FiniteThread) -> bool:
        if isinstance(a, Deadlock):
            return True
        key = (id(a), id(b))
        hit = memo.get(key)
        if hit is not None:
            return hit
        if isinstance(a, Stop):
            res = isinstance(b, Stop)
        else:
            res = (
                isinstance(b, Branch)
                and a.action == b.action
                and go(a.yes, b.yes)
                and go(a.no, b.no)
            )
        memo[key] = res
        return res

    return go(left, right)


def tree_equal(left: FiniteThread, right: FiniteThread) -> bool:
    """Structural equality that is safe on shared (DAG) trees."""
    memo: dict[tuple[int, int], bool] = {}

    def go(a: FiniteThread, b: FiniteThread) -> bool:
        if a is b:
            return True
        key = (id(a), id(b))
        hit = memo.get(key)
        if hit is not None:
            return hit
        if isinstance(a, Branch):
            res = (
                isinstance(b, Branch)
                and a.action == b.action
                and go(a.yes, b.yes)
                and go(a.no, b.no)
            )
        else:
            res = type(a) is type(b)
        memo[key] = res
        return res

    return go(left, right)


def refines(spec_p: LinearSpec, spec_q: LinearSpec) -> bool:
    """Decide the refinement order between the root threads of two specs.

    For regular threads the order is already determined at finite depth: with
    n the total number of equations of both specs, it holds exactly when the
    depth-n approximations of the two roots are related. That criterion is
    decided here by a synchronized walk over reachable state pairs, assuming
    the relation on revisited pairs; the walk computes the same answer without
    materializing the approximation trees.
    """
    _require_valid(spec_p)
    _require_valid(spec_q)
    seen: set[tuple[int, int]] = set()
    stack = [(spec_p.root, spec_q.root)]
    while stack:
        pair = stack.pop()
        if pair in seen:
            continue
        seen.add(pair)
        a = spec_p.rhs(pair[0])
        b = spec_q.rhs(pair[1])
        if isinstance(a, Deadlock):
            continue
        if isinstance(a, Stop):
            if not isinstance(b, Stop):
                return False
            continue
        if not isinstance(b, BranchRef) or a.action != b.action:
            return False
        stack.append((a.yes, b.yes))
        stack.append((a.no, b.no))
    return True


def thread_equal(spec_p: LinearSpec, spec_q: LinearSpec) -> bool:
    """Equality of the root threads: refinement in both directions."""
    return refines(spec_p, spec_q) and refines(spec_q, spec_p)


@dataclass(frozen=True)
class Witness:
    """A finite trace separating two threads: the scripted steps taken to
    reach the first disagreement, and what disagreed there."""

    steps: tuple[tuple[Action, bool], ...]
    reason: str

    def __str__(self) -> str:
        lines = [f"{action} {'true' if reply else 'false'}" for action, reply in self.steps]
        lines.append(f"differs: {self.reason}")
        return "\n".join(lines)


def _describe_rhs(rhs: SpecRhs) -> str:
    if isinstance(rhs, Stop):
        return "S"
    if isinstance(rhs, Deadlock):
        return "D"
    return f"action {rhs.action}"


def distinguish(spec_p: LinearSpec, spec_q: LinearSpec) -> Witness | None:
    """Search for a shortest distinguishing trace; None when the root threads
    are equal."""
    _require_valid(spec_p)
    _require_valid(spec_q)
    start = (spec_p.root, spec_q.root)
    parent: dict[tuple[int, int], tuple[tuple[int, int], Action, bool] | None] = {start: None}
    queue = deque([start])

    def trace_to(pair: tuple[int, int]) -> tuple[tuple[Action, bool], ...]:
        steps = []
        link = parent[pair]
        while link is not None:
            prev, action, reply = link
            steps.append((action, reply))
            link = parent[prev]
        return tuple(reversed(steps))

    while queue:
        pair = queue.popleft()
        a = spec_p.rhs(pair[0])
        b = spec_q.rhs(pair[1])
        same_kind = (
            (isinstance(a, Stop) and isinstance(b, Stop))
            or (isinstance(a, Deadlock) and isinstance(b, Deadlock))
            or (
                isinstance(a, BranchRef)
                and isinstance(b, BranchRef)
                and a.action == b.action
            )
        )
        if not same_kind:
            return Witness(trace_to(pair), f"{_describe_rhs(a)} vs {_describe_rhs(b)}")
        if isinstance(a, BranchRef):
            assert isinstance(b, BranchRef)
            for reply, nxt in ((True, (a.yes, b.yes)), (False, (a.no, b.no))):
                if nxt not in parent:
                    parent[nxt] = (pair, a.action, reply)
                    queue.append(nxt)
    return None


@dataclass(frozen=True)
class ReplyScript:
    """An ordered supply of boolean replies with a consumption cursor."""

    values: tuple[bool, ...] = ()
    cursor: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.cursor <= len(self.values):
            raise ValueError("cursor beyond script length")

    @classmethod
    def from_text(cls, text: str) -> "ReplyScript":
        """Build a script from a compact string, e.g. ``TTF`` or ``110``."""
        values = []
        for ch in text:
            if ch in "Tt1":
                values.append(True)
            elif ch in "Ff0":
                values.append(False)
            elif ch in ", ":
                continue
            else:
                raise ValueError(f"bad reply character {ch!r}")
        return cls(tuple(values))


@dataclass(frozen=True)
class Trace:
    """The visible steps of one simulation run and how it ended."""

    steps: tuple[tuple[Action, bool], ...]
    status: str

    @property
    def actions(self) -> tuple[Action, ...]:
        return tuple(action for action, _ in self.steps)

    def __str__(self) -> str:
        lines = [f"{action} {'true' if reply else 'false'}" for action, reply in self.steps]
        lines.append(self.status)
        return "\n".join(lines)


def simulate_thread(
    spec: LinearSpec | FiniteThread, script: ReplyScript, max_steps: int = 1000
) -> Trace:
    """Run a thread from its root, consuming one scripted reply per branch
    (true selects the left continuation). Ends with status ``S``, ``D``, or
    ``cutoff`` when the script or the step budget runs out.

    Accepts either a LinearSpec (unfolded on demand) or a finite thread tree.
    """
    if isinstance(spec, LinearSpec):
        _require_valid(spec)
        current: SpecRhs | FiniteThread = spec.rhs(spec.root)
    else:
        current = spec
    steps: list[tuple[Action, bool]] = []
    cursor = script.cursor
    while True:
        if isinstance(current, Stop):
            return Trace(tuple(steps), STATUS_STOP)
        if isinstance(current, Deadlock):
            return Trace(tuple(steps), STATUS_DEADLOCK)
        if len(steps) >= max_steps or cursor >= len(script.values):
            return Trace(tuple(steps), STATUS_CUTOFF)
        reply = script.values[cursor]
        cursor += 1
        if isinstance(current, BranchRef):
            steps.append((current.action, reply))
            current = spec.rhs(current.yes if reply else current.no)
        else:
            steps.append((current.action, reply))
            current = current.yes if reply else current.no


def format_spec(spec: LinearSpec) -> str:
    """Line-oriented text form: ``root N`` then one ``Xi = ...`` line per
    equation, branches written ``Xi = Xj <action> Xk``."""
    lines = [f"root {spec.root}"]
    for i, rhs in enumerate(spec.equations, 1):
        if isinstance(rhs, Stop):
            lines.append(f"X{i} = S")
        elif isinstance(rhs, Deadlock):
            lines.append(f"X{i} = D")
        else:
            lines.append(f"X{i} = X{rhs.yes} <{rhs.action}> X{rhs.no}")
    return "\n".join(lines)


def thread_to_spec(thread: FiniteThread) -> LinearSpec:
    """Number the nodes of a finite thread tree as a linear specification
    (shared subtrees get one equation each)."""
    index: dict[int, int] = {}
    order: list[FiniteThread] = []

    def visit(t: FiniteThread) -> int:
        key = id(t)
        if key in index:
            return index[key]
        index[key] = len(order) + 1
        order.append(t)
        if isinstance(t, Branch):
            visit(t.yes)
            visit(t.no)
        return index[key]

    visit(thread)
    equations: list[SpecRhs] = []
    for t in order:
        if isinstance(t, Stop):
            equations.append(STOP)
        elif isinstance(t, Deadlock):
            equations.append(DEADLOCK)
        else:
            equations.append(BranchRef(index[id(t.yes)], t.action, index[id(t.no)]))
    return LinearSpec(tuple(equations), 1)
