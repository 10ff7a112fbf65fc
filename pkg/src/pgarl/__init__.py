"""Workbench for instruction-sequence algebra with rigid loops.

Parse instruction sequences, reduce them to canonical form, extract their
behavior as regular threads, run threads against stateful services, project
fixed-count loops into counter-driven or fully unrolled programs, and decide
behavioral equivalence.
"""

from .threads import (
    DEADLOCK,
    STOP,
    Action,
    Branch,
    BranchRef,
    Deadlock,
    FiniteThread,
    LinearSpec,
    ReplyScript,
    SpecError,
    Stop,
    Trace,
    Witness,
    distinguish,
    finite_leq,
    format_spec,
    pi,
    pi_thread,
    prefixed,
    refines,
    simulate_thread,
    thread_equal,
    thread_to_spec,
    tree_equal,
    validate_spec,
)
from .program import (
    CLOSE,
    HALT,
    AnnClose,
    AnnJump,
    Basic,
    CanonicalProgram,
    DeadCodeWarning,
    Halt,
    Instruction,
    Jump,
    LoopClose,
    LoopHeader,
    NegTest,
    Part,
    PosTest,
    ProgramError,
    RawProgram,
    Unit,
    canonicalize,
    congruent,
    format_instruction,
    format_program,
    format_sequence,
    has_rigid,
    has_units,
    normalize_jumps,
)
from .parser import ParseError, parse_action, parse_canonical, parse_program
from .extraction import (
    behav_equiv,
    behav_witness,
    extract_pga,
    extract_pgau,
    pgau2pga,
    synthesize,
)
from .services import (
    CoAction,
    DivergenceSuspected,
    DownCounter,
    FullCounter,
    ProjectedProgram,
    Service,
    ServiceError,
    apply_bindings,
    apply_use_bounded,
    apply_use_finite,
    down_counter,
    full_counter,
    simulate_with_services,
)
from .rigidloops import (
    AnnotatedBody,
    Diagnostic,
    SizeReport,
    WellFormednessError,
    annotate,
    defining_thread,
    erase_annotations,
    project_counter,
    project_pure,
    size_report,
    validate_pgarl,
)

__version__ = "0.1.0"
