"""Clause language: predicates, signed literals, weighted clauses.

Clauses are universally quantified disjunctions over at most two variables
(x and y). A clause whose literals all mention only x is *unary* and acts on
single objects; anything touching y or a binary atom is *binary* and acts on
ordered pairs. Knowledge is a validated clause set split along that line.

Clause file grammar (UTF-8, one clause per line, '#' starts a comment):

    line    := weight ':' literal (',' literal)*
    weight  := '_' | '_(' FLOAT ')' | FLOAT     # learnable / learnable with
                                                # explicit init / fixed
    literal := 'n'? NAME '(' var ')' | 'n'? NAME '(x,y)'
    var     := 'x' | 'y'

A leading 'n' negates the atom. If a predicate name itself starts with 'n',
the whole token is matched against the schema first, so such names still
resolve as positive literals.

Schema file grammar: two lines, `unary: A,B,C` and `binary: R,S` (either
list may be empty).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

SLOT_X = "x"
SLOT_Y = "y"
SLOT_XY = "xy"

DEFAULT_LEARNABLE_INIT = 0.5

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_LITERAL_RE = re.compile(r"^(n?)([A-Za-z_][A-Za-z0-9_]*)\((x|y|x,y)\)$")


class KnowledgeError(ValueError):
    """Invalid clause, schema, or knowledge construction."""


class ClauseFileError(KnowledgeError):
    """Parse failure, carrying 1-based line and column."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class FixedWeight:
    value: float

    def __post_init__(self):
        if self.value < 0.0:
            raise KnowledgeError(f"fixed clause weight must be nonnegative, got {self.value}")


@dataclass(frozen=True)
class LearnableWeight:
    initial: float = DEFAULT_LEARNABLE_INIT

    def __post_init__(self):
        if self.initial < 0.0:
            raise KnowledgeError(f"learnable weight init must be nonnegative, got {self.initial}")


@dataclass(frozen=True)
class Literal:
    predicate: str
    sign: int  # +1 or -1
    var_slot: str  # SLOT_X, SLOT_Y, or SLOT_XY

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise KnowledgeError(f"literal sign must be +1 or -1, got {self.sign}")
        if self.var_slot not in (SLOT_X, SLOT_Y, SLOT_XY):
            raise KnowledgeError(f"bad var slot {self.var_slot!r}")

    def text(self) -> str:
        neg = "n" if self.sign < 0 else ""
        var = "x,y" if self.var_slot == SLOT_XY else self.var_slot
        return f"{neg}{self.predicate}({var})"


@dataclass(frozen=True)
class Clause:
    literals: tuple[Literal, ...]
    weight: FixedWeight | LearnableWeight = field(default_factory=LearnableWeight)

    def __post_init__(self):
        if not self.literals:
            raise KnowledgeError("clause must have at least one literal")
        seen = set()
        for lit in self.literals:
            key = (lit.predicate, lit.sign, lit.var_slot)
            if key in seen:
                raise KnowledgeError(f"repeated literal {lit.text()}")
            seen.add(key)

    @property
    def is_unary(self) -> bool:
        return all(lit.var_slot == SLOT_X for lit in self.literals)

    def weight_text(self) -> str:
        if isinstance(self.weight, FixedWeight):
            return repr(self.weight.value)
        if self.weight.initial == DEFAULT_LEARNABLE_INIT:
            return "_"
        return f"_({self.weight.initial!r})"

    def text(self) -> str:
        return self.weight_text() + ":" + ",".join(lit.text() for lit in self.literals)


@dataclass(frozen=True)
class PredicateSchema:
    unary_names: tuple[str, ...]
    binary_names: tuple[str, ...] = ()

    def __post_init__(self):
        names = list(self.unary_names) + list(self.binary_names)
        if len(set(names)) != len(names):
            raise KnowledgeError("predicate names must be unique across unary and binary lists")
        for name in names:
            if not _NAME_RE.fullmatch(name):
                raise KnowledgeError(f"bad predicate name {name!r}")

    def is_unary(self, name: str) -> bool:
        return name in self.unary_names

    def is_binary(self, name: str) -> bool:
        return name in self.binary_names


@dataclass(frozen=True)
class Knowledge:
    schema: PredicateSchema
    unary: tuple[Clause, ...]
    binary: tuple[Clause, ...]

    @property
    def clauses(self) -> tuple[Clause, ...]:
        return self.unary + self.binary

    def text(self) -> str:
        return "".join(c.text() + "\n" for c in self.clauses)


@dataclass(frozen=True)
class VectorClause:
    """Clause resolved against a concrete matrix layout: p[i] is the column
    of literal i's atom, s[i] its sign."""

    p: tuple[int, ...]
    s: tuple[int, ...]

    def __post_init__(self):
        if len(self.p) != len(self.s):
            raise KnowledgeError("p and s must align")


def _validate_clause(clause: Clause, schema: PredicateSchema) -> None:
    for lit in clause.literals:
        if schema.is_binary(lit.predicate):
            if lit.var_slot != SLOT_XY:
                raise KnowledgeError(
                    f"binary predicate {lit.predicate} needs both variables, got ({lit.var_slot})"
                )
        elif schema.is_unary(lit.predicate):
            if lit.var_slot == SLOT_XY:
                raise KnowledgeError(f"unary predicate {lit.predicate} cannot take (x,y)")
        else:
            raise KnowledgeError(f"unknown predicate {lit.predicate}")


def make_knowledge(schema: PredicateSchema, clauses) -> Knowledge:
    """Validate clauses against the schema and split them into the unary and
    binary sets (a clause is unary iff every literal is on x alone)."""
    unary, binary = [], []
    for clause in clauses:
        _validate_clause(clause, schema)
        (unary if clause.is_unary else binary).append(clause)
    return Knowledge(schema, tuple(unary), tuple(binary))


def _parse_weight(token: str, line_no: int, col: int) -> FixedWeight | LearnableWeight:
    token = token.strip()
    if token == "_":
        return LearnableWeight()
    if token.startswith("_(") and token.endswith(")"):
        try:
            init = float(token[2:-1])
        except ValueError:
            raise ClauseFileError(f"bad learnable init {token!r}", line_no, col) from None
        if init < 0.0:
            raise ClauseFileError(f"learnable init must be nonnegative, got {init}", line_no, col)
        return LearnableWeight(init)
    try:
        value = float(token)
    except ValueError:
        raise ClauseFileError(f"bad weight {token!r}", line_no, col) from None
    if value < 0.0:
        raise ClauseFileError(f"fixed weight must be nonnegative, got {value}", line_no, col)
    return FixedWeight(value)


def _parse_literal(token: str, schema: PredicateSchema, line_no: int, col: int) -> Literal:
    m = _LITERAL_RE.match(token.strip())
    if m is None:
        raise ClauseFileError(f"bad literal {token.strip()!r}", line_no, col)
    neg, name, var = m.group(1), m.group(2), m.group(3)
    # the whole token wins over the negation reading when both parse
    full = neg + name
    if schema.is_unary(full) or schema.is_binary(full):
        sign, predicate = 1, full
    elif neg and (schema.is_unary(name) or schema.is_binary(name)):
        sign, predicate = -1, name
    elif neg == "":
        raise ClauseFileError(f"unknown predicate {name!r}", line_no, col)
    else:
        raise ClauseFileError(f"unknown predicate {full!r} (nor {name!r} negated)", line_no, col)

    slot = SLOT_XY if var == "x,y" else var
    if schema.is_binary(predicate) and slot != SLOT_XY:
        raise ClauseFileError(f"binary predicate {predicate} needs (x,y)", line_no, col)
    if schema.is_unary(predicate) and slot == SLOT_XY:
        raise ClauseFileError(f"unary predicate {predicate} cannot take (x,y)", line_no, col)
    return Literal(predicate, sign, slot)


def parse_knowledge(text: str, schema: PredicateSchema) -> Knowledge:
    """Parse a clause file into validated Knowledge. Raises ClauseFileError
    with line/column on the first problem found."""
    clauses = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if ":" not in line:
            raise ClauseFileError("expected 'weight:literal,...'", line_no, 1)
        weight_part, body = line.split(":", 1)
        weight = _parse_weight(weight_part, line_no, 1)
        literals = []
        col = len(weight_part) + 2
        for token in body.split(","):
            # '(x,y)' splits on its comma; stitch the halves back together
            if token.endswith("(x") and literals is not None:
                pass
            literals.append(token)
            col += len(token) + 1
        literals = _restitch_pair_tokens(literals)
        col = len(weight_part) + 2
        parsed = []
        seen = set()
        for token in literals:
            lit = _parse_literal(token, schema, line_no, col)
            key = (lit.predicate, lit.sign, lit.var_slot)
            if key in seen:
                raise ClauseFileError(f"repeated literal {lit.text()}", line_no, col)
            seen.add(key)
            parsed.append(lit)
            col += len(token) + 1
        clauses.append(Clause(tuple(parsed), weight))
    return make_knowledge(schema, clauses)


def _restitch_pair_tokens(tokens: list[str]) -> list[str]:
    out: list[str] = []
    for token in tokens:
        if out and out[-1].count("(") > out[-1].count(")"):
            out[-1] = out[-1] + "," + token
        else:
            out.append(token)
    return out


def serialize_knowledge(knowledge: Knowledge) -> str:
    return knowledge.text()


def parse_schema(text: str) -> PredicateSchema:
    """Parse the two-line schema file."""
    unary: tuple[str, ...] | None = None
    binary: tuple[str, ...] = ()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("unary:"):
            unary = _split_names(line[len("unary:"):])
        elif line.startswith("binary:"):
            binary = _split_names(line[len("binary:"):])
        else:
            raise ClauseFileError("expected 'unary: ...' or 'binary: ...'", line_no, 1)
    if unary is None:
        raise KnowledgeError("schema file must declare a unary line")
    return PredicateSchema(unary, binary)


def _split_names(csv: str) -> tuple[str, ...]:
    names = [n.strip() for n in csv.split(",") if n.strip()]
    return tuple(names)


def serialize_schema(schema: PredicateSchema) -> str:
    return (
        "unary: " + ",".join(schema.unary_names) + "\n"
        "binary: " + ",".join(schema.binary_names) + "\n"
    )


def unary_layout(schema: PredicateSchema) -> tuple[str, ...]:
    """Column keys of the per-object matrix: one column per unary predicate."""
    return tuple(schema.unary_names)


def pair_layout(schema: PredicateSchema) -> tuple[str, ...]:
    """Column keys of the per-edge matrix: the x-side copies of the unary
    predicates, then the y-side copies, then the binary predicates."""
    return (
        tuple(f"{n}:x" for n in schema.unary_names)
        + tuple(f"{n}:y" for n in schema.unary_names)
        + tuple(schema.binary_names)
    )


def to_vector_clause(clause: Clause, layout) -> VectorClause:
    """Resolve each literal of `clause` to a column of the target matrix.

    Literals on x resolve to their '<name>:x' column when the layout has
    side-split copies, otherwise to the bare predicate column; literals on y
    require '<name>:y'; binary atoms use their own column.
    """
    index = {key: i for i, key in enumerate(layout)}
    p, s = [], []
    for lit in clause.literals:
        if lit.var_slot == SLOT_XY:
            candidates = [lit.predicate]
        elif lit.var_slot == SLOT_X:
            candidates = [f"{lit.predicate}:x", lit.predicate]
        else:
            candidates = [f"{lit.predicate}:y"]
        col = next((index[k] for k in candidates if k in index), None)
        if col is None:
            raise KnowledgeError(f"literal {lit.text()} not resolvable in layout {list(layout)}")
        p.append(col)
        s.append(lit.sign)
    return VectorClause(tuple(p), tuple(s))
