"""Rigid loops: well-formedness, annotation, and the two projections.

A rigid loop repeats its body a fixed number of times through a counter that
the program itself cannot observe. The counter projection keeps the program
small: it annotates every loop closure with the repetitions left after the
first pass and the body size, replaces each closure by a five-instruction
unit driving a dedicated down counter, packs counter resets onto jumps that
leave a loop, and binds one counter service per closure position. The pure
projection instead unrolls every loop into plain instructions, which is
behaviorally equivalent but blows the program up combinatorially.
"""

from __future__ import annotations

from dataclasses import dataclass

from .program import (
    AnnClose,
    AnnJump,
    Basic,
    CanonicalProgram,
    Instruction,
    Jump,
    LoopClose,
    LoopHeader,
    NegTest,
    PosTest,
    ProgramError,
    Unit,
    has_rigid,
    normalize_jumps,
)
from .services import ProjectedProgram, apply_bindings, down_counter
from .threads import Action, LinearSpec


class WellFormednessError(ValueError):
    """Raised when a projection is asked to run on an ill-formed program."""

    def __init__(self, diagnostics: list["Diagnostic"]):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" or "warning"
    position: int | None
    message: str

    def __str__(self) -> str:
        where = f" at {self.position}" if self.position is not None else ""
        return f"{self.severity}{where}: {self.message}"


@dataclass(frozen=True)
class AnnotatedBody:
    """Annotation result: the instruction list with closures and qualifying
    jumps annotated, plus the matched closure-to-header position pairs."""

    instructions: tuple[Instruction, ...]
    header_positions: tuple[tuple[int, int], ...]

    @property
    def header_map(self) -> dict[int, int]:
        return dict(self.header_positions)


def _match_loops(instructions) -> tuple[dict[int, int], list[int], list[int]]:
    """Left-to-right innermost matching of headers and closures; returns
    (closure position -> header position, lonely headers, lonely closures)."""
    stack: list[int] = []
    pairs: dict[int, int] = {}
    lonely_closures: list[int] = []
    for pos, ins in enumerate(instructions, 1):
        if isinstance(ins, LoopHeader):
            stack.append(pos)
        elif isinstance(ins, LoopClose):
            if stack:
                pairs[pos] = stack.pop()
            else:
                lonely_closures.append(pos)
    return pairs, stack, lonely_closures


def validate_pgarl(program: CanonicalProgram) -> list[Diagnostic]:
    """Check the projection restrictions. Errors block projection; lonely
    headers and closures are legal (they act as skips) and only warn."""
    out: list[Diagnostic] = []
    flat = list(program.prefix) + list(program.body or ())
    plen = len(program.prefix)
    for pos, ins in enumerate(flat, 1):
        if isinstance(ins, (AnnClose, AnnJump)):
            out.append(
                Diagnostic(
                    "error", pos, "annotated instruction in a source program"
                )
            )
    pairs, lonely_headers, lonely_closures = _match_loops(flat)
    for pos in lonely_headers:
        out.append(
            Diagnostic("warning", pos, "loop header has no matching closure; acts as a skip")
        )
    for pos in lonely_closures:
        out.append(
            Diagnostic("warning", pos, "loop closure has no matching header; acts as a skip")
        )
    for close_pos, header_pos in pairs.items():
        if header_pos <= plen < close_pos:
            out.append(
                Diagnostic(
                    "warning",
                    header_pos,
                    "loop spans the repetition boundary; the pure projection rejects this",
                )
            )
    if program.body:
        k = len(program.body)
        for offset, ins in enumerate(normalize_jumps(program.body), 1):
            if isinstance(ins, Jump) and ins.distance >= k:
                out.append(
                    Diagnostic(
                        "warning",
                        plen + offset,
                        f"jump distance {ins.distance} in a repeated body of length {k} "
                        "never reaches another instruction",
                    )
                )
    for pos, ins in enumerate(flat, 1):
        if not isinstance(ins, LoopClose):
            continue
        predecessors = []
        if pos > 1:
            predecessors.append(pos - 1)
        elif program.body and plen == 0:
            predecessors.append(len(flat))
        if program.body and pos == plen + 1:
            predecessors.append(len(flat))  # wrap within the repeated body
        for pred in set(predecessors):
            if isinstance(flat[pred - 1], (PosTest, NegTest)):
                out.append(
                    Diagnostic(
                        "error", pos, "loop closure directly preceded by a test instruction"
                    )
                )
                break
    return out


def annotate(instructions, cyclic: bool = False) -> AnnotatedBody:
    """Annotate one instruction list.

    First pass: match headers and closures with a stack; a closure whose
    header carries count c and whose body spans m instructions becomes the
    annotated closure (c-1, m), and a closure with no header becomes (0, 0).
    Second pass: a jump whose path crosses annotated closures becomes an
    annotated jump listing those closure positions (in increasing order) with
    their left annotations; with ``cyclic`` the path wraps and positions are
    reduced modulo the body length.
    """
    items = list(instructions)
    n = len(items)
    stack: list[tuple[int, int]] = []
    matched: list[tuple[int, int]] = []
    for pos, ins in enumerate(items, 1):
        if isinstance(ins, LoopHeader):
            stack.append((pos, ins.count))
        elif isinstance(ins, LoopClose):
            if stack:
                header_pos, count = stack.pop()
                items[pos - 1] = AnnClose(count - 1, pos - header_pos - 1)
                matched.append((pos, header_pos))
            else:
                items[pos - 1] = AnnClose(0, 0)
    closures = {
        pos: ins.remaining
        for pos, ins in enumerate(items, 1)
        if isinstance(ins, AnnClose)
    }
    if closures:
        for pos, ins in enumerate(items, 1):
            if not isinstance(ins, Jump) or ins.distance <= 1:
                continue
            crossed: dict[int, int] = {}
            for x in range(pos + 1, pos + ins.distance):
                if cyclic:
                    j = ((x - 1) % n) + 1
                elif x > n:
                    break
                else:
                    j = x
                if j in closures:
                    crossed[j] = closures[j]
            if crossed:
                items[pos - 1] = AnnJump(ins.distance, tuple(sorted(crossed.items())))
    return AnnotatedBody(tuple(items), tuple(matched))


def erase_annotations(instructions) -> tuple[Instruction, ...]:
    """Drop annotations, restoring plain closures and jumps."""
    out = []
    for ins in instructions:
        if isinstance(ins, AnnClose):
            out.append(LoopClose())
        elif isinstance(ins, AnnJump):
            out.append(Jump(ins.distance))
        else:
            out.append(ins)
    return tuple(out)


def _counter_focus(position: int) -> str:
    return f"rlc:{position}"


def _psi(ins: Instruction, position: int, body_len: int) -> Instruction:
    if isinstance(ins, LoopHeader):
        return Jump(1)
    if isinstance(ins, AnnJump):
        resets = tuple(
            Basic(Action("set", focus=_counter_focus(j), argument=value))
            for j, value in ins.resets
        )
        return Unit(resets + (Jump(ins.distance),))
    if isinstance(ins, AnnClose):
        focus = _counter_focus(position)
        return Unit(
            (
                PosTest(Action("dec", focus=focus)),
                Jump(3),
                Basic(Action("set", focus=focus, argument=ins.remaining)),
                Jump(2),
                Jump(body_len - ins.body_size),
            )
        )
    return ins


def _omega_form(program: CanonicalProgram, xi_tail: str) -> tuple[Instruction, ...]:
    """Bring any canonical shape to a single repeated body.

    A body-only program is taken as is (jumps normalized). A repetition-free
    program is wrapped with two trailing dead jumps, capping every jump so it
    lands at most on them. A mixed program appends two wrap-back jumps after
    the body and raises body jumps that would wrap so they skip the appended
    jumps and the prefix, which only runs once.
    """
    if xi_tail not in ("derived", "paper"):
        raise ValueError("xi_tail must be 'derived' or 'paper'")
    if program.body is not None and not program.prefix:
        return normalize_jumps(program.body)
    if program.body is None:
        k = len(program.prefix)
        wrapped = [
            Jump(min(ins.distance, k + 2 - i)) if isinstance(ins, Jump) else ins
            for i, ins in enumerate(program.prefix, 1)
        ]
        return tuple(wrapped) + (Jump(0), Jump(0))
    k = len(program.prefix)
    m = len(program.body)
    head: list[Instruction] = []
    for i, ins in enumerate(program.prefix, 1):
        if isinstance(ins, Jump):
            distance = ins.distance
            while distance > k - i + m:
                distance -= m
            ins = Jump(distance)
        head.append(ins)
    mid: list[Instruction] = []
    for i, ins in enumerate(normalize_jumps(program.body), 1):
        if isinstance(ins, Jump) and i + ins.distance > m:
            ins = Jump(ins.distance + k + 2)
        mid.append(ins)
    tail = Jump(k + 2) if xi_tail == "derived" else Jump(k)
    return tuple(head) + tuple(mid) + (tail, tail)


def project_counter(program: CanonicalProgram, xi_tail: str = "derived") -> ProjectedProgram:
    """The counter-service projection.

    The output program starts with one counter initialization per annotated
    closure, followed by the repeated body with headers turned into skips,
    closures into counter-driving units, and annotated jumps into units that
    reset the counters of every loop they leave. Each closure position gets
    its own down-counter binding.
    """
    diagnostics = validate_pgarl(program)
    errors = [d for d in diagnostics if d.severity == "error"]
    if errors:
        raise WellFormednessError(errors)
    if not has_rigid(program):
        return ProjectedProgram(program, ())
    body = normalize_jumps(_omega_form(program, xi_tail))
    annotated = annotate(body, cyclic=True)
    closures = [
        (pos, ins.remaining)
        for pos, ins in enumerate(annotated.instructions, 1)
        if isinstance(ins, AnnClose)
    ]
    body_len = len(body)
    prefix = tuple(
        Basic(Action("set", focus=_counter_focus(pos), argument=value))
        for pos, value in closures
    )
    mapped = tuple(
        _psi(ins, pos, body_len) for pos, ins in enumerate(annotated.instructions, 1)
    )
    bindings = tuple(
        (_counter_focus(pos), down_counter(0, max=value)) for pos, value in closures
    )
    return ProjectedProgram(CanonicalProgram(prefix, mapped), bindings)


def defining_thread(program: CanonicalProgram, xi_tail: str = "derived") -> LinearSpec:
    """The meaning of a rigid-loop program: project with counters, then apply
    the counter services."""
    return apply_bindings(project_counter(program, xi_tail))


def _gap_crossings(lo: int, hi: int, first_gap: int, period: int | None) -> int:
    """How many insertion gaps (at first_gap, first_gap+period, ...) lie in
    the inclusive stream interval [lo, hi]."""
    if hi < lo:
        return 0
    if period is None:
        return 1 if lo <= first_gap <= hi else 0
    if hi < first_gap:
        return 0
    start = max(lo, first_gap)
    over = start - first_gap
    first = first_gap + -(-over // period) * period
    if first > hi:
        return 0
    return (hi - first) // period + 1


def _raise_jump(ins: Instruction, source: int, first_gap: int, period: int | None, grow: int):
    if not isinstance(ins, Jump) or ins.distance == 0:
        return ins
    crossings = _gap_crossings(source, source + ins.distance - 1, first_gap, period)
    if crossings:
        return Jump(ins.distance + grow * crossings)
    return ins


def _expand_step(
    seq: list[Instruction], header: int, close: int, *, stream_base: int, period: int | None,
    outside: list[tuple[int, Instruction]] | None = None,
) -> tuple[list[Instruction], list[Instruction] | None]:
    """One application of an expansion equation on the loop [header..close]
    of ``seq``. ``stream_base`` is the stream position of seq[0]; ``period``
    is the repetition period when ``seq`` is an ω-body. ``outside`` holds
    (stream position, instruction) pairs of a preceding finite segment whose
    jumps may cross the insertion; the adjusted copy is returned alongside.
    """
    count = seq[header - 1].count  # type: ignore[union-attr]
    inner = seq[header:close - 1]
    k = len(inner)
    if count == 1:
        new_seq = seq[: header - 1] + [Jump(1)] + inner + [Jump(1)] + seq[close:]
        return new_seq, [ins for _, ins in outside] if outside is not None else None
    grow = k + 2
    gap = stream_base + close  # insertion sits between close and close+1
    copy = [
        Jump(ins.distance + grow) if isinstance(ins, Jump) and i + ins.distance > k + 1 else ins
        for i, ins in enumerate(inner, 1)
    ]
    before = [
        _raise_jump(ins, stream_base + pos, gap, period, grow)
        for pos, ins in enumerate(seq[: header - 1], 1)
    ]
    after = [
        _raise_jump(ins, stream_base + pos, gap, period, grow)
        for pos, ins in enumerate(seq[close:], close + 1)
    ]
    residual = [LoopHeader(count - 1)] + inner + [LoopClose()]
    new_seq = before + [Jump(1)] + copy + [Jump(1)] + residual + after
    adjusted_outside = None
    if outside is not None:
        adjusted_outside = [
            _raise_jump(ins, src, gap, period, grow) for src, ins in outside
        ]
    return new_seq, adjusted_outside


def _leftmost_loop(seq: list[Instruction]) -> tuple[int, int] | None:
    pairs, _, _ = _match_loops(seq)
    if not pairs:
        return None
    by_header = {h: c for c, h in pairs.items()}
    header = min(by_header)
    return header, by_header[header]


def project_pure(program: CanonicalProgram) -> CanonicalProgram:
    """Remove every rigid loop by unrolling, leftmost header first.

    A one-iteration loop turns both its bracket instructions into skips; a
    loop of n+1 iterations becomes one unrolled copy (with jumps that leave
    the copy raised past the rest) followed by the n-iteration loop, and
    every other jump crossing the grown region is raised to keep its target.
    Lonely headers and closures become skips first. Loops spanning the
    prefix/repetition boundary are rejected.
    """
    diagnostics = validate_pgarl(program)
    errors = [d for d in diagnostics if d.severity == "error"]
    if errors:
        raise WellFormednessError(errors)
    prefix = list(program.prefix)
    body = list(program.body or ())
    flat = prefix + body
    pairs, lonely_headers, lonely_closures = _match_loops(flat)
    plen = len(prefix)
    for close_pos, header_pos in pairs.items():
        if header_pos <= plen < close_pos:
            raise ProgramError(
                "a loop spanning the prefix/repetition boundary cannot be expanded"
            )
    for pos in lonely_headers + lonely_closures:
        flat[pos - 1] = Jump(1)
    prefix, body = flat[:plen], flat[plen:]

    while True:
        loop = _leftmost_loop(prefix)
        if loop is None:
            break
        prefix, _ = _expand_step(prefix, loop[0], loop[1], stream_base=0, period=None)
    while True:
        loop = _leftmost_loop(body)
        if loop is None:
            break
        outside = list(enumerate(prefix, 1))
        body, prefix = _expand_step(
            body,
            loop[0],
            loop[1],
            stream_base=len(prefix),
            period=len(body),
            outside=outside,
        )
    return CanonicalProgram(tuple(prefix), tuple(body) if body else None)


@dataclass(frozen=True)
class SizeReport:
    """Instruction counts of a program and its two projections. Outer counts
    treat a unit as one instruction; the expanded count sums unit bodies.
    ``loop_product`` is the largest product of iteration counts along one
    nesting chain (1 when there are no loops)."""

    source_len: int
    pure_len: int
    counter_len: int
    counter_len_expanded: int
    loop_product: int


def _expanded_len(instructions) -> int:
    total = 0
    for ins in instructions:
        if isinstance(ins, Unit):
            total += _expanded_len(ins.body)
        else:
            total += 1
    return total


def _loop_product(flat: list[Instruction]) -> int:
    pairs, _, _ = _match_loops(flat)
    matched_headers = set(pairs.values())
    best = 1
    stack: list[int] = []
    product = 1
    for pos, ins in enumerate(flat, 1):
        if isinstance(ins, LoopHeader) and pos in matched_headers:
            stack.append(ins.count)
            product *= ins.count
            best = max(best, product)
        elif isinstance(ins, LoopClose) and pos in pairs:
            product //= stack.pop()
    return best


def size_report(program: CanonicalProgram, xi_tail: str = "derived") -> SizeReport:
    """Measure the source against both projections."""
    pure = project_pure(program)
    counter = project_counter(program, xi_tail).program
    counter_flat = list(counter.prefix) + list(counter.body or ())
    return SizeReport(
        source_len=len(program),
        pure_len=len(pure),
        counter_len=len(counter),
        counter_len_expanded=_expanded_len(counter_flat),
        loop_product=_loop_product(list(program.prefix) + list(program.body or ())),
    )
