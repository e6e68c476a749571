"""Boolean-vector sequence programs and the consistency-checker compiler.

A program reads a token sequence as one indicator vector per alphabet symbol
and defines new Boolean vectors through two kinds of operations:

* position-wise: each entry is a Boolean formula over same-position entries
  of earlier vectors;
* attention: each position i selects the leftmost (argmin) or rightmost
  (argmax) position j allowed by a mask predicate whose score formula holds,
  and copies the value formula evaluated at (i, j); a default formula applies
  when no such j exists.

The compiler turns a STRIPS domain into such a program: per atom, indicator
vectors for "precondition", "affected" and "deleted", one attention operation
asking whether the most recent affecting action deleted the atom, an OR over
atoms, and a final unmasked attention that broadcasts whether any position
was violated. The last entry of the final vector labels the trace.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from .core import Domain, validate_domain

# --------------------------------------------------------------------------
# Boolean expressions


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Ref:
    """Reference to an earlier vector, read at position i or j."""

    name: str
    side: str = "i"


@dataclass(frozen=True)
class Not:
    arg: "BoolExpr"


@dataclass(frozen=True)
class And:
    args: tuple["BoolExpr", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["BoolExpr", ...]


BoolExpr = Union[Const, Ref, Not, And, Or]


def or_all(exprs: Sequence[BoolExpr]) -> BoolExpr:
    if not exprs:
        return Const(0)
    if len(exprs) == 1:
        return exprs[0]
    return Or(tuple(exprs))


def _expr_refs(e: BoolExpr):
    if isinstance(e, Ref):
        yield e
    elif isinstance(e, Not):
        yield from _expr_refs(e.arg)
    elif isinstance(e, (And, Or)):
        for a in e.args:
            yield from _expr_refs(a)


def _eval_expr(e: BoolExpr, record: dict[str, list[int]], i: int, j: int | None) -> int:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Ref):
        if e.side == "i":
            return record[e.name][i]
        if j is None:
            raise ValueError(f"reference {e.name}(j) outside an attention predicate")
        return record[e.name][j]
    if isinstance(e, Not):
        return 1 - _eval_expr(e.arg, record, i, j)
    if isinstance(e, And):
        return int(all(_eval_expr(a, record, i, j) for a in e.args))
    if isinstance(e, Or):
        return int(any(_eval_expr(a, record, i, j) for a in e.args))
    raise TypeError(f"not a boolean expression: {e!r}")


def expr_to_text(e: BoolExpr, top: bool = True) -> str:
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Ref):
        return f"{e.name}({e.side})"
    if isinstance(e, Not):
        return f"!{expr_to_text(e.arg, top=False)}"
    if isinstance(e, (And, Or)):
        sep = " & " if isinstance(e, And) else " | "
        body = sep.join(expr_to_text(a, top=False) for a in e.args)
        return body if top else f"({body})"
    raise TypeError(f"not a boolean expression: {e!r}")


# --------------------------------------------------------------------------
# Operations and programs

MASKS = ("none", "j<i", "j>i")
DIRECTIONS = ("argmin", "argmax")


@dataclass(frozen=True)
class PositionWise:
    name: str
    expr: BoolExpr


@dataclass(frozen=True)
class Attention:
    name: str
    direction: str
    mask: str
    score: BoolExpr
    value: BoolExpr
    default: BoolExpr


BraspOp = Union[PositionWise, Attention]


@dataclass(frozen=True)
class BraspProgram:
    """Ordered vector definitions over an input alphabet, with one output."""

    alphabet: tuple[str, ...]
    ops: tuple[BraspOp, ...]
    output: str

    def validate(self) -> None:
        defined = [f"I_{t}" for t in self.alphabet]
        known = set(defined)
        if len(known) != len(defined):
            raise ValueError("duplicate token in alphabet")
        for op in self.ops:
            if op.name in known:
                raise ValueError(f"vector {op.name!r} defined twice")
            if isinstance(op, PositionWise):
                checks = [(op.expr, False)]
            else:
                if op.direction not in DIRECTIONS:
                    raise ValueError(f"bad attention direction {op.direction!r}")
                if op.mask not in MASKS:
                    raise ValueError(f"bad attention mask {op.mask!r}")
                checks = [(op.score, True), (op.value, True), (op.default, False)]
            for expr, allow_j in checks:
                for ref in _expr_refs(expr):
                    if ref.name not in known:
                        raise ValueError(
                            f"{op.name!r} references undefined vector {ref.name!r}")
                    if ref.side not in ("i", "j"):
                        raise ValueError(f"bad reference side {ref.side!r}")
                    if ref.side == "j" and not allow_j:
                        raise ValueError(
                            f"{op.name!r} uses a j-side reference outside "
                            f"an attention score/value predicate")
            known.add(op.name)
        if self.output not in known:
            raise ValueError(f"output vector {self.output!r} is never defined")


def _mask_allows(mask: str, i: int, j: int) -> bool:
    if mask == "none":
        return True
    if mask == "j<i":
        return j < i
    return j > i


def eval_program(program: BraspProgram, word: Sequence[str]) -> dict[str, list[int]]:
    """Run a program on a token sequence; returns every vector by name."""
    program.validate()
    n = len(word)
    if n < 1:
        raise ValueError("input word must be non-empty")
    for t in word:
        if t not in program.alphabet:
            raise ValueError(f"token {t!r} not in program alphabet")

    record: dict[str, list[int]] = {}
    for t in program.alphabet:
        record[f"I_{t}"] = [1 if w == t else 0 for w in word]

    for op in program.ops:
        if isinstance(op, PositionWise):
            record[op.name] = [_eval_expr(op.expr, record, i, None) for i in range(n)]
            continue
        out = []
        indices = range(n) if op.direction == "argmin" else range(n - 1, -1, -1)
        for i in range(n):
            for j in indices:
                if _mask_allows(op.mask, i, j) and _eval_expr(op.score, record, i, j):
                    out.append(_eval_expr(op.value, record, i, j))
                    break
            else:
                out.append(_eval_expr(op.default, record, i, None))
        record[op.name] = out
    return record


# --------------------------------------------------------------------------
# Compiling a domain into a trace-consistency program


def compile_domain(d: Domain) -> BraspProgram:
    """Build the program whose output labels traces like the oracle does.

    Per atom p: Q_p marks positions whose action requires p, K_p positions
    whose action affects p, V_p positions whose action deletes p. Y_p attends
    over earlier positions with score Q_p(i) & K_p(j) and copies V_p(j): it
    is 1 exactly when the most recent affecting action deleted a needed atom.
    Y ORs the per-atom violations and Z broadcasts whether any position is
    violated, so Z(n) is the trace label.
    """
    validate_domain(d)
    ops: list[BraspOp] = []
    y_names = []
    for p in d.atoms:
        q = or_all([Ref(f"I_{a.name}") for a in d.actions if p in a.pre])
        k = or_all([Ref(f"I_{a.name}") for a in d.actions
                    if p in a.add or p in a.delete])
        v = or_all([Ref(f"I_{a.name}") for a in d.actions if p in a.delete])
        ops.append(PositionWise(f"Q_{p}", q))
        ops.append(PositionWise(f"K_{p}", k))
        ops.append(PositionWise(f"V_{p}", v))
        ops.append(Attention(
            name=f"Y_{p}",
            direction="argmax",
            mask="j<i",
            score=And((Ref(f"Q_{p}", "i"), Ref(f"K_{p}", "j"))),
            value=Ref(f"V_{p}", "j"),
            default=Const(0),
        ))
        y_names.append(f"Y_{p}")
    ops.append(PositionWise("Y", or_all([Ref(n) for n in y_names])))
    ops.append(Attention(
        name="Z",
        direction="argmax",
        mask="none",
        score=Ref("Y", "j"),
        value=Const(1),
        default=Const(0),
    ))
    alphabet = tuple(a.name for a in d.actions)
    program = BraspProgram(alphabet=alphabet, ops=tuple(ops), output="Z")
    program.validate()
    return program


def brasp_classify(d: Domain, trace: Sequence[int]) -> int:
    """Label a trace by compiling and running the domain's program."""
    program = compile_domain(d)
    word = d.trace_to_names(trace)
    record = eval_program(program, word)
    return record[program.output][-1]


# --------------------------------------------------------------------------
# Textual dumps


def program_to_text(program: BraspProgram) -> str:
    lines = [f"alphabet: {' '.join(program.alphabet)}"]
    for op in program.ops:
        if isinstance(op, PositionWise):
            lines.append(f"{op.name}(i) := {expr_to_text(op.expr)}")
        else:
            arrow = "argmin_j" if op.direction == "argmin" else "argmax_j"
            mask = "true" if op.mask == "none" else op.mask
            lines.append(
                f"{op.name}(i) := {arrow} [{mask}, {expr_to_text(op.score)}] "
                f"{expr_to_text(op.value)} : {expr_to_text(op.default)}")
    lines.append(f"output: {program.output}")
    return "\n".join(lines)


def record_to_text(record: dict[str, list[int]], word: Sequence[str]) -> str:
    """Render an execution record as one row per vector under the input word."""
    width = max(len(name) for name in record)
    cols = [max(len(t), 1) for t in word]
    header = " " * width + "  " + "  ".join(t.rjust(c) for t, c in zip(word, cols))
    lines = [header]
    for name, bits in record.items():
        row = "  ".join(str(b).rjust(c) for b, c in zip(bits, cols))
        lines.append(f"{name.ljust(width)}  {row}")
    return "\n".join(lines)
