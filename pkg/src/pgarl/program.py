"""Instruction sequences: primitive and extended instructions, concatenation
and repetition, and the first canonical form.

A program is a finite instruction list, a repeated list, or a finite prefix
followed by a repeated part. Canonicalization truncates everything after the
first repetition, reduces the repeated body to its minimal period, and absorbs
a maximal suffix of the prefix into the body by rotation; two programs are
instruction-sequence congruent exactly when their canonical forms coincide.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Iterator

from .threads import Action


class ProgramError(ValueError):
    """A program was used in a way its shape does not support."""


class DeadCodeWarning(UserWarning):
    """Instructions after a repetition are unreachable and get dropped."""


class Instruction:
    """Base class for all instructions."""


@dataclass(frozen=True)
class Basic(Instruction):
    """Perform the action; the reply is ignored."""

    action: Action


@dataclass(frozen=True)
class PosTest(Instruction):
    """Perform the action; on false skip the next instruction."""

    action: Action


@dataclass(frozen=True)
class NegTest(Instruction):
    """Perform the action; on true skip the next instruction."""

    action: Action


@dataclass(frozen=True)
class Halt(Instruction):
    """Successful termination (written ``!``)."""


@dataclass(frozen=True)
class Jump(Instruction):
    """Jump ``distance`` instructions forward; 0 jumps to itself (deadlock),
    1 acts as a skip."""

    distance: int

    def __post_init__(self) -> None:
        if self.distance < 0:
            raise ValueError("jump distance must be a natural number")


@dataclass(frozen=True)
class LoopHeader(Instruction):
    """Open a rigid loop repeating its body ``count`` times (written
    ``3x{``)."""

    count: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError("loop count must be positive")


@dataclass(frozen=True)
class LoopClose(Instruction):
    """Close the most recently opened rigid loop (written ``}x``)."""


@dataclass(frozen=True)
class AnnClose(Instruction):
    """Annotated loop closure ``n}x m``: ``remaining`` repetitions still to
    run after the first pass, over a body of ``body_size`` instructions."""

    remaining: int
    body_size: int

    def __post_init__(self) -> None:
        if self.remaining < 0 or self.body_size < 0:
            raise ValueError("closure annotations must be natural numbers")


@dataclass(frozen=True)
class AnnJump(Instruction):
    """Annotated jump ``#l(j1,n1)...``: a jump of ``distance`` whose path
    crosses annotated closures at the listed positions; each crossed loop
    counter is reset to the paired value."""

    distance: int
    resets: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if self.distance < 0:
            raise ValueError("jump distance must be a natural number")


@dataclass(frozen=True)
class Unit(Instruction):
    """A wrapped fragment that counts as a single instruction for outside
    jump counting while executing its body instruction by instruction."""

    body: tuple[Instruction, ...]

    def __post_init__(self) -> None:
        if not self.body:
            raise ValueError("unit body must be nonempty")
        for ins in self.body:
            if isinstance(ins, (LoopHeader, LoopClose)):
                raise ValueError("rigid loop instructions are not allowed inside a unit")


HALT = Halt()
CLOSE = LoopClose()


@dataclass(frozen=True)
class Part:
    """One concatenation operand: a finite instruction list, possibly
    repeated."""

    instructions: tuple[Instruction, ...]
    repeated: bool = False


@dataclass(frozen=True)
class RawProgram:
    """Parsed program: concatenated parts as written. The parser accepts
    instructions after a repetition; canonicalization drops them."""

    parts: tuple[Part, ...]


@dataclass(frozen=True)
class CanonicalProgram:
    """First canonical form shape: a finite prefix and an optional repeated
    body (prefix only, body only, or both)."""

    prefix: tuple[Instruction, ...] = ()
    body: tuple[Instruction, ...] | None = None

    def __post_init__(self) -> None:
        if self.body is not None and not self.body:
            raise ValueError("repeated body must be nonempty when present")

    def __len__(self) -> int:
        return len(self.prefix) + (len(self.body) if self.body else 0)


def walk_instructions(instructions: Iterable[Instruction]) -> Iterator[Instruction]:
    """All instructions, descending into unit bodies."""
    for ins in instructions:
        yield ins
        if isinstance(ins, Unit):
            yield from walk_instructions(ins.body)


def program_instructions(program: RawProgram | CanonicalProgram) -> Iterator[Instruction]:
    if isinstance(program, RawProgram):
        for part in program.parts:
            yield from walk_instructions(part.instructions)
    else:
        yield from walk_instructions(program.prefix)
        if program.body:
            yield from walk_instructions(program.body)


def has_units(program: RawProgram | CanonicalProgram) -> bool:
    return any(isinstance(ins, Unit) for ins in program_instructions(program))


def has_rigid(program: RawProgram | CanonicalProgram) -> bool:
    return any(
        isinstance(ins, (LoopHeader, LoopClose, AnnClose, AnnJump))
        for ins in program_instructions(program)
    )


def format_instruction(ins: Instruction) -> str:
    if isinstance(ins, Halt):
        return "!"
    if isinstance(ins, Jump):
        return f"#{ins.distance}"
    if isinstance(ins, AnnJump):
        return f"#{ins.distance}" + "".join(f"({j},{n})" for j, n in ins.resets)
    if isinstance(ins, Basic):
        return str(ins.action)
    if isinstance(ins, PosTest):
        return f"+{ins.action}"
    if isinstance(ins, NegTest):
        return f"-{ins.action}"
    if isinstance(ins, LoopHeader):
        return f"{ins.count}x{{"
    if isinstance(ins, LoopClose):
        return "}x"
    if isinstance(ins, AnnClose):
        return f"{ins.remaining}}}x{ins.body_size}"
    if isinstance(ins, Unit):
        return f"u({format_sequence(ins.body)})"
    raise TypeError(f"not an instruction: {ins!r}")


def format_sequence(instructions: Iterable[Instruction]) -> str:
    return ";".join(format_instruction(ins) for ins in instructions)


def format_program(program: RawProgram | CanonicalProgram) -> str:
    if isinstance(program, RawProgram):
        chunks = []
        for part in program.parts:
            text = format_sequence(part.instructions)
            chunks.append(f"({text})^w" if part.repeated else text)
        return ";".join(chunks)
    chunks = []
    if program.prefix:
        chunks.append(format_sequence(program.prefix))
    if program.body:
        chunks.append(f"({format_sequence(program.body)})^w")
    return ";".join(chunks)


def _minimal_period(body: list[Instruction]) -> list[Instruction]:
    n = len(body)
    for d in range(1, n + 1):
        if n % d == 0 and body == body[:d] * (n // d):
            return body[:d]
    return body


def canonicalize(program: RawProgram) -> CanonicalProgram:
    """Reduce to first canonical form: drop everything after the first
    repetition, shrink the body to its minimal period, then absorb the
    longest possible prefix suffix into the body by right rotation."""
    prefix: list[Instruction] = []
    body: list[Instruction] | None = None
    for i, part in enumerate(program.parts):
        if part.repeated:
            body = list(part.instructions)
            if i + 1 < len(program.parts):
                warnings.warn(
                    "instructions after a repetition are unreachable and were dropped",
                    DeadCodeWarning,
                    stacklevel=2,
                )
            break
        prefix.extend(part.instructions)
    if body is None:
        return CanonicalProgram(tuple(prefix), None)
    body = _minimal_period(body)
    while prefix and prefix[-1] == body[-1]:
        prefix.pop()
        body = [body[-1]] + body[:-1]
    return CanonicalProgram(tuple(prefix), tuple(body))


def congruent(p: RawProgram, q: RawProgram) -> bool:
    """Instruction-sequence congruence: identical canonical forms."""
    return canonicalize(p) == canonicalize(q)


def normalize_jumps(body: Iterable[Instruction]) -> tuple[Instruction, ...]:
    """Reduce jump distances inside a repeated body of length k: a distance
    m > k wraps to ((m-1) mod k) + 1, which lands on the same instruction of
    the periodic stream; distances up to and including k stay as written."""
    items = tuple(body)
    if not items:
        raise ProgramError("cannot normalize jumps of an empty body")
    k = len(items)
    out = []
    for ins in items:
        if isinstance(ins, Jump) and ins.distance > k:
            ins = Jump(((ins.distance - 1) % k) + 1)
        out.append(ins)
    return tuple(out)
