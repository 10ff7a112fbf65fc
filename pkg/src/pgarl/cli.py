"""Command-line surface.

Exit codes: 0 success (or: equivalent), 1 not equivalent, 2 parse error,
3 well-formedness error, 4 internal budget exhaustion.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from .extraction import extract_pga, extract_pgau
from .parser import ParseError, parse_program
from .program import (
    CanonicalProgram,
    ProgramError,
    RawProgram,
    canonicalize,
    format_instruction,
    format_program,
    format_sequence,
    has_rigid,
    has_units,
)
from .rigidloops import (
    WellFormednessError,
    annotate,
    defining_thread,
    project_counter,
    project_pure,
    size_report,
    validate_pgarl,
)
from .services import (
    DivergenceSuspected,
    DownCounter,
    FullCounter,
    Service,
    ServiceError,
    apply_use_bounded,
    apply_use_finite,
    simulate_with_services,
)
from .threads import (
    LinearSpec,
    ReplyScript,
    SpecError,
    distinguish,
    format_spec,
    thread_to_spec,
)

EXIT_OK = 0
EXIT_NOT_EQUIVALENT = 1
EXIT_PARSE_ERROR = 2
EXIT_ILL_FORMED = 3
EXIT_BUDGET = 4


class _CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class Binding:
    focus: str
    service: Service

    def describe(self) -> str:
        if isinstance(self.service, DownCounter):
            return f"{self.focus}=dc(init={self.service.initial},max={self.service.limit})"
        return f"{self.focus}=counter(init={self.service.initial})"


def _parse_binding(text: str) -> Binding:
    focus, _, rest = text.partition("=")
    focus = focus.strip()
    rest = rest.strip()
    if not focus or not rest:
        raise _CliError(f"bad binding {text!r}; expected focus=dc(...) or focus=counter()",
                        EXIT_ILL_FORMED)
    if rest.startswith("dc(") and rest.endswith(")"):
        init, limit = 0, 0
        fields = rest[3:-1].strip()
        if fields:
            for field in fields.split(","):
                key, _, value = field.partition("=")
                key = key.strip()
                if key == "init":
                    init = int(value)
                elif key == "max":
                    limit = int(value)
                else:
                    raise _CliError(f"unknown dc() field {key!r}", EXIT_ILL_FORMED)
        try:
            return Binding(focus, DownCounter(init, limit))
        except ValueError as exc:
            raise _CliError(str(exc), EXIT_ILL_FORMED) from None
    if rest.startswith("counter(") and rest.endswith(")"):
        fields = rest[8:-1].strip()
        init = 0
        if fields:
            key, _, value = fields.partition("=")
            if key.strip() != "init":
                raise _CliError(f"unknown counter() field {key.strip()!r}", EXIT_ILL_FORMED)
            init = int(value)
        return Binding(focus, FullCounter(init))
    raise _CliError(f"bad service spec {rest!r}", EXIT_ILL_FORMED)


def _load_programs(args, expected: int) -> list[RawProgram]:
    sources: list[str] = []
    for text in args.expr or []:
        sources.append(text)
    for path in args.inputs or []:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                sources.append(handle.read())
        except OSError as exc:
            raise _CliError(f"cannot read {path}: {exc}", EXIT_PARSE_ERROR) from None
    if len(sources) != expected:
        raise _CliError(
            f"expected {expected} program(s), got {len(sources)}; pass -e TEXT or file paths",
            EXIT_PARSE_ERROR,
        )
    return [parse_program(text) for text in sources]


def _spec_json(spec: LinearSpec) -> dict:
    equations = []
    for i, line in enumerate(format_spec(spec).splitlines()[1:], 1):
        equations.append({"index": i, "text": line})
    return {"root": spec.root, "equations": equations}


def _emit(args, text: str, payload: dict) -> None:
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def _program_spec(program: CanonicalProgram, args) -> LinearSpec:
    """Extract through the projection a program's instruction set calls for."""
    if has_rigid(program):
        if getattr(args, "via", "defining") == "pure":
            return extract_pgau(project_pure(program))
        return defining_thread(program, args.xi_tail)
    if has_units(program):
        return extract_pgau(program)
    return extract_pga(program)


def _cmd_parse(args) -> int:
    (raw,) = _load_programs(args, 1)
    lines = []
    parts_payload = []
    for number, part in enumerate(raw.parts, 1):
        label = f"part {number} repeated" if part.repeated else f"part {number}"
        lines.append(label)
        for pos, ins in enumerate(part.instructions, 1):
            lines.append(f"  {pos} {format_instruction(ins)}")
        parts_payload.append(
            {
                "repeated": part.repeated,
                "instructions": [format_instruction(i) for i in part.instructions],
            }
        )
    _emit(args, "\n".join(lines), {"parts": parts_payload})
    return EXIT_OK


def _cmd_normalize(args) -> int:
    (raw,) = _load_programs(args, 1)
    text = format_program(canonicalize(raw))
    _emit(args, text, {"program": text})
    return EXIT_OK


def _cmd_annotate(args) -> int:
    (raw,) = _load_programs(args, 1)
    program = canonicalize(raw)
    diagnostics = validate_pgarl(program)
    errors = [d for d in diagnostics if d.severity == "error"]
    if errors:
        raise WellFormednessError(errors)
    if program.body and program.prefix:
        raise _CliError(
            "annotate expects a repetition-free or fully repeating program", EXIT_ILL_FORMED
        )
    if program.body:
        annotated = annotate(program.body, cyclic=True)
        text = f"({format_sequence(annotated.instructions)})^w"
    else:
        annotated = annotate(program.prefix, cyclic=False)
        text = format_sequence(annotated.instructions)
    _emit(args, text, {"program": text})
    return EXIT_OK


def _cmd_project(args) -> int:
    (raw,) = _load_programs(args, 1)
    program = canonicalize(raw)
    if args.mode == "pure":
        text = format_program(project_pure(program))
        _emit(args, text, {"program": text})
        return EXIT_OK
    projected = project_counter(program, args.xi_tail)
    bind_lines = [
        Binding(focus, svc).describe() for focus, svc in projected.bindings
    ]
    text = "\n".join([format_program(projected.program)] + [f"bind {b}" for b in bind_lines])
    _emit(
        args,
        text,
        {"program": format_program(projected.program), "bindings": bind_lines},
    )
    return EXIT_OK


def _cmd_extract(args) -> int:
    (raw,) = _load_programs(args, 1)
    program = canonicalize(raw)
    bindings = [_parse_binding(text) for text in args.bind or []]
    spec = _program_spec(program, args)
    enumerable = [b for b in bindings if b.service.states is not None]
    unbounded = [b for b in bindings if b.service.states is None]
    for binding in enumerable:
        spec = apply_use_finite(spec, binding.focus, binding.service)
    if unbounded:
        if args.depth is None:
            raise _CliError(
                "binding a service without a finite enumeration needs --depth", EXIT_ILL_FORMED
            )
        thread = None
        for binding in unbounded:
            thread = apply_use_bounded(spec, binding.focus, binding.service, args.depth)
            spec = thread_to_spec(thread)
    text = format_spec(spec)
    _emit(args, text, _spec_json(spec))
    return EXIT_OK


def _cmd_equiv(args) -> int:
    left_raw, right_raw = _load_programs(args, 2)
    left = _program_spec(canonicalize(left_raw), args)
    right = _program_spec(canonicalize(right_raw), args)
    witness = distinguish(left, right)
    if witness is None:
        _emit(args, "equivalent", {"equivalent": True})
        return EXIT_OK
    _emit(
        args,
        "not equivalent\n" + str(witness),
        {"equivalent": False, "witness": str(witness).splitlines()},
    )
    return EXIT_NOT_EQUIVALENT


def _cmd_simulate(args) -> int:
    (raw,) = _load_programs(args, 1)
    program = canonicalize(raw)
    bindings = [_parse_binding(text) for text in args.bind or []]
    if has_rigid(program):
        projected = project_counter(program, args.xi_tail)
        spec = extract_pgau(projected.program)
        bindings = [Binding(f, s) for f, s in projected.bindings] + bindings
    else:
        spec = extract_pgau(program)
    script = ReplyScript.from_text(args.replies or "")
    trace = simulate_with_services(
        spec, tuple((b.focus, b.service) for b in bindings), script, args.max_steps
    )
    _emit(
        args,
        str(trace),
        {
            "steps": [[str(action), reply] for action, reply in trace.steps],
            "status": trace.status,
        },
    )
    return EXIT_OK


def _cmd_stats(args) -> int:
    (raw,) = _load_programs(args, 1)
    report = size_report(canonicalize(raw), args.xi_tail)
    fields = {
        "source_len": report.source_len,
        "pure_len": report.pure_len,
        "counter_len": report.counter_len,
        "counter_len_expanded": report.counter_len_expanded,
        "loop_product": report.loop_product,
    }
    _emit(args, "\n".join(f"{k} {v}" for k, v in fields.items()), fields)
    return EXIT_OK


def _add_program_args(sub) -> None:
    sub.add_argument("inputs", nargs="*", help="program file(s)")
    sub.add_argument("-e", "--expr", action="append", help="inline program text")
    sub.add_argument("--format", choices=("text", "json"), default="text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pgarl",
        description="Instruction-sequence workbench: canonical forms, thread "
        "extraction, counter services, and rigid-loop projections.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="dump the parsed instruction sequence")
    _add_program_args(p)
    p.set_defaults(handler=_cmd_parse)

    p = sub.add_parser("normalize", help="print the first canonical form")
    _add_program_args(p)
    p.set_defaults(handler=_cmd_normalize)

    p = sub.add_parser("annotate", help="annotate loop closures and exiting jumps")
    _add_program_args(p)
    p.set_defaults(handler=_cmd_annotate)

    p = sub.add_parser("project", help="project rigid loops away")
    _add_program_args(p)
    p.add_argument("--mode", choices=("counter", "pure"), default="counter")
    p.add_argument("--xi-tail", choices=("derived", "paper"), default="derived")
    p.set_defaults(handler=_cmd_project)

    p = sub.add_parser("extract", help="print the extracted thread")
    _add_program_args(p)
    p.add_argument("--xi-tail", choices=("derived", "paper"), default="derived")
    p.add_argument("--via", choices=("defining", "pure"), default="defining")
    p.add_argument("--bind", action="append", help="focus=dc(init=0,max=3) or focus=counter()")
    p.add_argument("--depth", type=int, default=None,
                   help="visible depth when binding an unbounded service")
    p.set_defaults(handler=_cmd_extract)

    p = sub.add_parser("equiv", help="decide behavioral equivalence of two programs")
    _add_program_args(p)
    p.add_argument("--xi-tail", choices=("derived", "paper"), default="derived")
    p.add_argument("--via", choices=("defining", "pure"), default="defining")
    p.set_defaults(handler=_cmd_equiv)

    p = sub.add_parser("simulate", help="run a program against scripted replies")
    _add_program_args(p)
    p.add_argument("--xi-tail", choices=("derived", "paper"), default="derived")
    p.add_argument("--bind", action="append", help="focus=dc(init=0,max=3) or focus=counter()")
    p.add_argument("--replies", default="", help="reply script, e.g. TTF or 110")
    p.add_argument("--max-steps", type=int, default=1000)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("stats", help="compare projection sizes")
    _add_program_args(p)
    p.add_argument("--xi-tail", choices=("derived", "paper"), default="derived")
    p.set_defaults(handler=_cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except _CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    except WellFormednessError as exc:
        print(f"well-formedness error: {exc}", file=sys.stderr)
        return EXIT_ILL_FORMED
    except (ProgramError, ServiceError, SpecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ILL_FORMED
    except DivergenceSuspected as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    raise SystemExit(main())
