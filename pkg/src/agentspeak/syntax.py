"""Abstract syntax of agent programs, a Jason-like parser and a renderer.

Terms carry no annotations; annotations live on atoms only.  A source
annotation is itself a term: the constants ``percept`` and ``self``, an
agent name, or a variable (as in the trigger ``+finishedDoing(G)[A]``).
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union


class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}" if line else message)


# ── terms ──────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class Constant:
    value: str | int

    def __post_init__(self):
        if self.value == "":
            raise ValueError("constant names must be nonempty")


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Structure:
    functor: str
    args: tuple[Term, ...]

    def __post_init__(self):
        if not self.functor:
            raise ValueError("functor must be nonempty")
        if not self.args:
            raise ValueError("zero-arity structures are constants")


Term = Union[Constant, Variable, Structure]

PERCEPT = Constant("percept")
SELF = Constant("self")
ME = Constant("me")


@dataclass(frozen=True)
class Atom:
    functor: str
    args: tuple[Term, ...] = ()
    annotations: frozenset[Term] = frozenset()

    def predicate(self) -> tuple[str, tuple[Term, ...]]:
        return self.functor, self.args

    def with_annotations(self, annotations: Iterable[Term]) -> Atom:
        return Atom(self.functor, self.args, frozenset(annotations))

    def as_term(self) -> Term:
        return Structure(self.functor, self.args) if self.args else Constant(self.functor)


@dataclass(frozen=True)
class AtomVar:
    """A variable written where an atomic formula is expected (``+P``, ``not P[self]``)."""

    var: Variable
    annotations: frozenset[Term] = frozenset()


AtomLike = Union[Atom, AtomVar]


def term_to_atom(term: Term, annotations: frozenset[Term] = frozenset()) -> AtomLike:
    if isinstance(term, Variable):
        return AtomVar(term, annotations)
    if isinstance(term, Structure):
        return Atom(term.functor, term.args, annotations)
    if isinstance(term.value, int):
        raise TypeError(f"integer {term.value} cannot be used as an atomic formula")
    return Atom(term.value, (), annotations)


class TriggerOp(enum.Enum):
    ADD_BELIEF = "+"
    DEL_BELIEF = "-"
    ADD_ACHIEVE = "+!"
    DEL_ACHIEVE = "-!"
    ADD_TEST = "+?"
    DEL_TEST = "-?"


@dataclass(frozen=True)
class TriggeringEvent:
    op: TriggerOp
    atom: AtomLike


@dataclass(frozen=True)
class Literal:
    atom: AtomLike
    negated: bool = False


Context = tuple[Literal, ...]


class Performative(enum.Enum):
    TELL = "tell"
    UNTELL = "untell"
    ACHIEVE = "achieve"
    UNACHIEVE = "unachieve"
    TELL_HOW = "tellHow"
    UNTELL_HOW = "untellHow"
    ASK_IF = "askIf"
    ASK_ALL = "askAll"
    ASK_HOW = "askHow"


ASK_PERFORMATIVES = frozenset({Performative.ASK_IF, Performative.ASK_ALL, Performative.ASK_HOW})


@dataclass(frozen=True)
class Action:
    atom: Atom


@dataclass(frozen=True)
class SendAction:
    receiver: Term
    ilf: Performative
    # a single AtomLike, a tuple of AtomLike (braced set), a tuple of Plan,
    # or a TriggeringEvent (askHow)
    content: object


@dataclass(frozen=True)
class AchieveGoal:
    atom: AtomLike


@dataclass(frozen=True)
class TestGoal:
    __test__ = False  # keep pytest from collecting it

    atom: AtomLike


@dataclass(frozen=True)
class AddBeliefUpdate:
    atom: AtomLike


@dataclass(frozen=True)
class DelBeliefUpdate:
    atom: AtomLike


BodyFormula = Union[Action, SendAction, AchieveGoal, TestGoal, AddBeliefUpdate, DelBeliefUpdate]


@dataclass(frozen=True)
class Plan:
    trigger: TriggeringEvent
    context: Context = ()
    body: tuple[BodyFormula, ...] = ()


@dataclass(frozen=True)
class AgentProgram:
    name: str
    beliefs: tuple[Atom, ...] = ()
    plans: tuple[Plan, ...] = field(default_factory=tuple)


# ── variable traversal ─────────────────────────────────────────────────


def iter_vars(node) -> Iterator[Variable]:
    """Yield every variable occurring in ``node``, in textual order."""
    if isinstance(node, Variable):
        yield node
    elif isinstance(node, Constant):
        return
    elif isinstance(node, Structure):
        for a in node.args:
            yield from iter_vars(a)
    elif isinstance(node, Atom):
        for a in node.args:
            yield from iter_vars(a)
        for a in sorted(node.annotations, key=render_term):
            yield from iter_vars(a)
    elif isinstance(node, AtomVar):
        yield node.var
        for a in sorted(node.annotations, key=render_term):
            yield from iter_vars(a)
    elif isinstance(node, (TriggeringEvent, Literal, AchieveGoal, TestGoal, AddBeliefUpdate,
                           DelBeliefUpdate, Action)):
        yield from iter_vars(node.atom)
    elif isinstance(node, SendAction):
        yield from iter_vars(node.receiver)
        yield from iter_vars(node.content)
    elif isinstance(node, Plan):
        yield from iter_vars(node.trigger)
        for lit in node.context:
            yield from iter_vars(lit)
        for f in node.body:
            yield from iter_vars(f)
    elif isinstance(node, (tuple, list, frozenset)):
        for x in node:
            yield from iter_vars(x)
    else:
        raise TypeError(f"cannot traverse {type(node).__name__}")


def var_names(node) -> set[str]:
    return {v.name for v in iter_vars(node)}


def is_ground(node) -> bool:
    return next(iter_vars(node), None) is None


# ── rendering ──────────────────────────────────────────────────────────

_IDENT = re.compile(r"[a-z][A-Za-z0-9_]*\Z")


def render_term(t: Term) -> str:
    if isinstance(t, Variable):
        return t.name
    if isinstance(t, Constant):
        if isinstance(t.value, int):
            return str(t.value)
        if _IDENT.match(t.value) and t.value not in _KEYWORDS:
            return t.value
        return json.dumps(t.value)
    return f"{_render_functor(t.functor)}({','.join(render_term(a) for a in t.args)})"


def _render_functor(name: str) -> str:
    return name if _IDENT.match(name) and name not in _KEYWORDS else json.dumps(name)


def annotation_key(t: Term) -> tuple:
    """Canonical annotation order: percept, self, agent names, then variables."""
    if t == PERCEPT:
        return (0, "")
    if t == SELF:
        return (1, "")
    if isinstance(t, Variable):
        return (3, t.name)
    return (2, render_term(t))


def render_annotations(annotations: frozenset[Term]) -> str:
    if not annotations:
        return ""
    return "[" + ",".join(render_term(a) for a in sorted(annotations, key=annotation_key)) + "]"


def render_atom(a: AtomLike) -> str:
    if isinstance(a, AtomVar):
        return a.var.name + render_annotations(a.annotations)
    head = _render_functor(a.functor)
    if a.args:
        head += "(" + ",".join(render_term(t) for t in a.args) + ")"
    return head + render_annotations(a.annotations)


def render_trigger(te: TriggeringEvent) -> str:
    return te.op.value + render_atom(te.atom)


def render_context(ctx: Context) -> str:
    if not ctx:
        return "true"
    return " & ".join(("not " if lit.negated else "") + render_atom(lit.atom) for lit in ctx)


def render_content(content) -> str:
    if isinstance(content, TriggeringEvent):
        return render_trigger(content)
    if isinstance(content, (Atom, AtomVar)):
        return render_atom(content)
    items = list(content)
    if items and isinstance(items[0], Plan):
        return "{" + " ".join(render_plan(p) for p in items) + "}"
    return "{" + ",".join(render_atom(a) for a in items) + "}"


def render_formula(f: BodyFormula) -> str:
    if isinstance(f, Action):
        return render_atom(f.atom)
    if isinstance(f, SendAction):
        return f".send({render_term(f.receiver)},{f.ilf.value},{render_content(f.content)})"
    if isinstance(f, AchieveGoal):
        return "!" + render_atom(f.atom)
    if isinstance(f, TestGoal):
        return "?" + render_atom(f.atom)
    if isinstance(f, AddBeliefUpdate):
        return "+" + render_atom(f.atom)
    if isinstance(f, DelBeliefUpdate):
        return "-" + render_atom(f.atom)
    raise TypeError(type(f).__name__)


def render_body(body: tuple[BodyFormula, ...]) -> str:
    return "; ".join(render_formula(f) for f in body) if body else "true"


def render_plan(p: Plan, terminator: str = ".") -> str:
    head = render_trigger(p.trigger)
    if p.context:
        head += " : " + render_context(p.context)
    return f"{head} <- {render_body(p.body)}{terminator}"


def render_program(prog: AgentProgram) -> str:
    lines = [render_atom(b) + "." for b in prog.beliefs]
    lines += [render_plan(p) for p in prog.plans]
    return "\n".join(lines) + "\n"


def render(node) -> str:
    """Render any syntax node in the concrete syntax accepted by the parser."""
    if isinstance(node, (Constant, Variable, Structure)):
        return render_term(node)
    if isinstance(node, (Atom, AtomVar)):
        return render_atom(node)
    if isinstance(node, TriggeringEvent):
        return render_trigger(node)
    if isinstance(node, Literal):
        return render_context((node,))
    if isinstance(node, Plan):
        return render_plan(node)
    if isinstance(node, AgentProgram):
        return render_program(node)
    if isinstance(node, (Action, SendAction, AchieveGoal, TestGoal, AddBeliefUpdate, DelBeliefUpdate)):
        return render_formula(node)
    raise TypeError(f"cannot render {type(node).__name__}")


# ── tokenizer ──────────────────────────────────────────────────────────

_KEYWORDS = frozenset({"not", "true"})

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*)
  | (?P<send>\.send\b)
  | (?P<arrow><-)
  | (?P<num>\d+)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<var>[A-Z][A-Za-z0-9_]*)
  | (?P<ident>[a-z][A-Za-z0-9_]*)
  | (?P<punct>[()\[\]{},.:;&+\-!?])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            if kind == "punct":
                kind = chunk
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ── parser ─────────────────────────────────────────────────────────────

_PERFORMATIVES = {p.value: p for p in Performative}


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def error(self, expected: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ParseError(f"expected {expected}, found {found}", tok.line, tok.column)

    def accept(self, kind: str) -> Token | None:
        if self.tok.kind == kind:
            tok = self.tok
            self.i += 1
            return tok
        return None

    def expect(self, kind: str, expected: str | None = None) -> Token:
        tok = self.accept(kind)
        if tok is None:
            raise self.error(expected or repr(kind))
        return tok

    # terms

    def term(self) -> Term:
        tok = self.tok
        if self.accept("var"):
            return Variable(tok.text)
        if self.accept("num"):
            return Constant(int(tok.text))
        if tok.kind == "-" and self.peek().kind == "num":
            self.i += 1
            return Constant(-int(self.expect("num").text))
        if self.accept("str"):
            return Constant(json.loads(tok.text))
        if tok.kind == "ident":
            self.i += 1
            if self.accept("("):
                args = self.term_list(")")
                return Structure(tok.text, args)
            return Constant(tok.text)
        raise self.error("a term")

    def term_list(self, close: str) -> tuple[Term, ...]:
        args = [self.term()]
        while self.accept(","):
            args.append(self.term())
        self.expect(close)
        return tuple(args)

    def annotations(self) -> frozenset[Term]:
        if not self.accept("["):
            return frozenset()
        sources = [self.source()]
        while self.accept(","):
            sources.append(self.source())
        self.expect("]")
        return frozenset(sources)

    def source(self) -> Term:
        tok = self.tok
        if self.accept("var"):
            return Variable(tok.text)
        if self.accept("ident"):
            if self.tok.kind == "(":
                raise ParseError("nested annotations are not supported", tok.line, tok.column)
            return Constant(tok.text)
        if self.accept("str"):
            return Constant(json.loads(tok.text))
        raise self.error("an annotation source")

    def atom(self) -> Atom:
        tok = self.tok
        if tok.kind == "str":
            self.i += 1
            name = json.loads(tok.text)
        elif tok.kind == "ident" and tok.text not in _KEYWORDS:
            self.i += 1
            name = tok.text
        else:
            raise self.error("an atomic formula")
        args: tuple[Term, ...] = ()
        if self.accept("("):
            args = self.term_list(")")
        return Atom(name, args, self.annotations())

    def atom_or_var(self) -> AtomLike:
        tok = self.tok
        if self.accept("var"):
            return AtomVar(Variable(tok.text), self.annotations())
        return self.atom()

    # plans

    def trigger(self) -> TriggeringEvent:
        sign = self.tok
        if not (self.accept("+") or self.accept("-")):
            raise self.error("'+' or '-' starting a triggering event")
        kind = ""
        if self.accept("!"):
            kind = "!"
        elif self.accept("?"):
            kind = "?"
        return TriggeringEvent(TriggerOp(sign.text + kind), self.atom_or_var())

    def context(self) -> Context:
        if self.tok.kind == "ident" and self.tok.text == "true" and self.peek().kind != "(":
            self.i += 1
            return ()
        lits = [self.literal()]
        while self.accept("&"):
            lits.append(self.literal())
        return tuple(lits)

    def literal(self) -> Literal:
        negated = False
        if self.tok.kind == "ident" and self.tok.text == "not":
            self.i += 1
            negated = True
        return Literal(self.atom_or_var(), negated)

    def body(self) -> tuple[BodyFormula, ...]:
        if self.tok.kind == "ident" and self.tok.text == "true" and self.peek().kind != "(":
            self.i += 1
            return ()
        steps = [self.step()]
        while self.accept(";"):
            steps.append(self.step())
        return tuple(steps)

    def step(self) -> BodyFormula:
        tok = self.tok
        if self.accept("send"):
            self.expect("(")
            receiver = self.term()
            self.expect(",")
            perf_tok = self.expect("ident", "a performative")
            ilf = _PERFORMATIVES.get(perf_tok.text)
            if ilf is None:
                raise ParseError(
                    f"unknown performative {perf_tok.text!r}; expected one of "
                    + ", ".join(_PERFORMATIVES),
                    perf_tok.line,
                    perf_tok.column,
                )
            self.expect(",")
            content = self.content()
            self.expect(")")
            return SendAction(receiver, ilf, content)
        if self.accept("!"):
            return AchieveGoal(self.atom_or_var())
        if self.accept("?"):
            return TestGoal(self.atom_or_var())
        if self.accept("+"):
            return AddBeliefUpdate(self.atom_or_var())
        if self.accept("-"):
            return DelBeliefUpdate(self.atom_or_var())
        if tok.kind == "." and self.peek().kind == "ident":
            raise ParseError(f"unsupported internal action '.{self.peek().text}'", tok.line, tok.column)
        if tok.kind == "ident" and tok.text not in _KEYWORDS:
            a = self.atom()
            if a.annotations:
                raise ParseError("actions cannot carry annotations", tok.line, tok.column)
            return Action(a)
        raise self.error("a plan body formula")

    def content(self):
        if self.tok.kind in ("+", "-"):
            return self.trigger()
        if self.accept("{"):
            if self.tok.kind in ("+", "-"):
                plans = [self.plan(in_braces=True)]
                while self.tok.kind in ("+", "-"):
                    plans.append(self.plan(in_braces=True))
                self.expect("}")
                return tuple(plans)
            atoms = [self.atom_or_var()]
            while self.accept(","):
                atoms.append(self.atom_or_var())
            self.expect("}")
            return tuple(atoms)
        return self.atom_or_var()

    def plan(self, in_braces: bool = False) -> Plan:
        start = self.tok
        te = self.trigger()
        ctx: Context = ()
        if self.accept(":"):
            ctx = self.context()
        body: tuple[BodyFormula, ...] = ()
        if self.accept("arrow"):
            body = self.body()
        if in_braces:
            if not self.accept(".") and self.tok.kind != "}":
                raise self.error("'.' or '}' after a plan")
        else:
            self.expect(".", "'.' ending the plan")
        plan = Plan(te, ctx, body)
        _check_plan(plan, start)
        return plan

    def program(self, name: str) -> AgentProgram:
        beliefs: list[Atom] = []
        while self.tok.kind in ("ident", "str"):
            tok = self.tok
            b = self.atom()
            self.expect(".", "'.' ending the belief")
            if not is_ground(b):
                raise ParseError(f"initial belief {render_atom(b)} is not ground", tok.line, tok.column)
            if not b.annotations:
                b = b.with_annotations({SELF})
            beliefs.append(b)
        plans: list[Plan] = []
        while self.tok.kind != "eof":
            if self.tok.kind not in ("+", "-"):
                raise self.error("a plan (beliefs must precede plans)")
            plans.append(self.plan())
        if not plans:
            raise self.error("at least one plan")
        return AgentProgram(name, tuple(dict.fromkeys(beliefs)), tuple(plans))


def _check_plan(plan: Plan, start: Token) -> None:
    """A belief addition may only mention variables bound earlier in the plan."""
    bound = var_names(plan.trigger) | var_names(plan.context)
    for f in plan.body:
        if isinstance(f, AddBeliefUpdate):
            unbound = var_names(f.atom) - bound
            if unbound:
                raise ParseError(
                    f"belief addition +{render_atom(f.atom)} can never be ground: "
                    f"unbound variable(s) {', '.join(sorted(unbound))}",
                    start.line,
                    start.column,
                )
        bound |= var_names(f)


def _replace_me(node, name: str):
    if node == ME:
        return Constant(name)
    if isinstance(node, Structure):
        return Structure(node.functor, tuple(_replace_me(a, name) for a in node.args))
    if isinstance(node, Atom):
        return Atom(node.functor, tuple(_replace_me(a, name) for a in node.args),
                    frozenset(_replace_me(a, name) for a in node.annotations))
    if isinstance(node, AtomVar):
        return AtomVar(node.var, frozenset(_replace_me(a, name) for a in node.annotations))
    if isinstance(node, TriggeringEvent):
        return TriggeringEvent(node.op, _replace_me(node.atom, name))
    if isinstance(node, SendAction):
        return SendAction(_replace_me(node.receiver, name), node.ilf, _replace_me(node.content, name))
    if isinstance(node, (Action, AchieveGoal, TestGoal, AddBeliefUpdate, DelBeliefUpdate)):
        return type(node)(_replace_me(node.atom, name))
    if isinstance(node, Plan):
        return Plan(node.trigger, node.context, tuple(_replace_me(f, name) for f in node.body))
    if isinstance(node, tuple):
        return tuple(_replace_me(x, name) for x in node)
    return node


def parse_agent(source_text: str, agent_name: str) -> AgentProgram:
    """Parse an agent program; ``me`` in plan bodies becomes ``agent_name``."""
    prog = _Parser(source_text).program(agent_name)
    plans = tuple(_replace_me(p, agent_name) for p in prog.plans)
    return AgentProgram(prog.name, prog.beliefs, plans)


def _parse_whole(text: str, rule: str):
    p = _Parser(text)
    node = getattr(p, rule)()
    if p.tok.kind != "eof":
        raise p.error("end of input")
    return node


def parse_plan(text: str) -> Plan:
    p = _Parser(text)
    plan = p.plan(in_braces=True)
    if p.tok.kind != "eof":
        raise p.error("end of input")
    return plan


def parse_atom(text: str) -> Atom:
    return _parse_whole(text, "atom")


def parse_atom_or_var(text: str) -> AtomLike:
    return _parse_whole(text, "atom_or_var")


def parse_term(text: str) -> Term:
    return _parse_whole(text, "term")


def parse_trigger(text: str) -> TriggeringEvent:
    return _parse_whole(text, "trigger")


def parse_context(text: str) -> Context:
    return _parse_whole(text, "context")


def parse_content(text: str):
    return _parse_whole(text, "content")
