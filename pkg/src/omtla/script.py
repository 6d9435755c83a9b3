"""Parser and printer for the s-expression command language.

The accepted language is a small SMT-LIB-like subset with optimization
commands.  Parsing resolves every symbol against the declarations seen so
far, folds arithmetic into linear terms keyed by variable name and rejects
anything outside the linear fragment.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .arith import render_rational
from .formula import LinearTerm, Sort


class ParseError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col
        self.msg = msg


# -- s-expressions ---------------------------------------------------------------

@dataclass
class Tok:
    text: str
    line: int
    col: int


@dataclass
class SList:
    items: list
    line: int
    col: int


def tokenize(text: str):
    toks = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col = line + 1, 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "()":
            toks.append(Tok(ch, line, col))
            i += 1
            col += 1
            continue
        if ch == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise ParseError("unterminated quoted symbol", line, col)
            toks.append(Tok(text[i + 1:j], line, col))
            col += j + 1 - i
            i = j + 1
            continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in "();":
            j += 1
        toks.append(Tok(text[i:j], line, col))
        col += j - i
        i = j
    return toks


def read_sexprs(text: str) -> list:
    toks = tokenize(text)
    stack = [SList([], 0, 0)]
    for t in toks:
        if t.text == "(":
            stack.append(SList([], t.line, t.col))
        elif t.text == ")":
            if len(stack) == 1:
                raise ParseError("unbalanced ')'", t.line, t.col)
            done = stack.pop()
            stack[-1].items.append(done)
        else:
            stack[-1].items.append(t)
    if len(stack) > 1:
        s = stack[-1]
        raise ParseError("unbalanced '('", s.line, s.col)
    return stack[0].items


def sexpr_text(e) -> str:
    if isinstance(e, Tok):
        return e.text
    return "(" + " ".join(sexpr_text(x) for x in e.items) + ")"


# -- expression trees --------------------------------------------------------------

@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class BoolVar:
    name: str


@dataclass(frozen=True)
class Cmp:
    """``term REL 0`` with REL in <=, <, =, >=, >; ``term`` keyed by variable name."""
    term: LinearTerm
    rel: str


@dataclass(frozen=True)
class NotE:
    arg: object


@dataclass(frozen=True)
class AndE:
    args: tuple


@dataclass(frozen=True)
class OrE:
    args: tuple


# -- commands -------------------------------------------------------------------

@dataclass(frozen=True)
class DeclareFun:
    name: str
    sort: Sort


@dataclass(frozen=True)
class Assert:
    expr: object


@dataclass(frozen=True)
class Minimize:
    term: LinearTerm
    name: str
    maximize: bool = False
    lower: Optional[Fraction] = None
    upper: Optional[Fraction] = None


@dataclass(frozen=True)
class Push:
    n: int = 1


@dataclass(frozen=True)
class Pop:
    n: int = 1


@dataclass(frozen=True)
class CheckSat:
    pass


@dataclass(frozen=True)
class GetObjectives:
    pass


@dataclass(frozen=True)
class GetModel:
    pass


@dataclass(frozen=True)
class SetOption:
    key: str
    value: str


@dataclass(frozen=True)
class Exit:
    pass


@dataclass
class Script:
    commands: list = field(default_factory=list)

    def declarations(self) -> dict:
        return {c.name: c.sort for c in self.commands if isinstance(c, DeclareFun)}


SORTS = {"Bool": Sort.BOOL, "Int": Sort.INT, "Real": Sort.REAL}
RELATIONS = ("<=", "<", "=", ">=", ">")


def parse_number(text: str) -> Optional[Fraction]:
    """Numeral or decimal literal (optionally with a leading minus), else None."""
    if text.startswith("-") and len(text) > 1:
        q = parse_number(text[1:])
        return None if q is None else -q
    if not text or not (text[0].isdigit()):
        return None
    try:
        if "." in text:
            head, _, tail = text.partition(".")
            if not head.isdigit() or not tail.isdigit():
                return None
            return Fraction(text)
        if text.isdigit():
            return Fraction(int(text))
    except ValueError:
        return None
    return None


class _Parser:
    def __init__(self):
        self.sorts: dict = {}
        self.depth = 0

    def err(self, msg, node):
        raise ParseError(msg, node.line, node.col)

    # terms
    def term(self, e) -> LinearTerm:
        if isinstance(e, Tok):
            num = parse_number(e.text)
            if num is not None:
                return LinearTerm.const(num)
            if e.text.lstrip("-")[:1].isdigit():
                self.err(f"malformed number {e.text!r}", e)
            sort = self.sorts.get(e.text)
            if sort is None:
                self.err(f"unknown symbol {e.text!r}", e)
            if sort is Sort.BOOL:
                self.err(f"sort mismatch: {e.text} is Bool, expected a number", e)
            return LinearTerm({e.text: 1})
        if not e.items:
            self.err("empty term", e)
        head = e.items[0]
        if not isinstance(head, Tok):
            self.err("expected an operator", e)
        op, args = head.text, e.items[1:]
        if op == "+":
            if not args:
                self.err("arity error: + needs arguments", e)
            out = LinearTerm()
            for a in args:
                out = out + self.term(a)
            return out
        if op == "-":
            if not args:
                self.err("arity error: - needs arguments", e)
            first = self.term(args[0])
            if len(args) == 1:
                return -first
            for a in args[1:]:
                first = first - self.term(a)
            return first
        if op == "*":
            if len(args) < 2:
                self.err("arity error: * needs two or more arguments", e)
            out = self.term(args[0])
            for a in args[1:]:
                t = self.term(a)
                if out.is_constant():
                    out = t.scale(out.constant)
                elif t.is_constant():
                    out = out.scale(t.constant)
                else:
                    self.err("nonlinear term", e)
            return out
        if op == "/":
            if len(args) != 2:
                self.err("arity error: / takes two arguments", e)
            num, den = self.term(args[0]), self.term(args[1])
            if not den.is_constant():
                self.err("nonlinear term: division by a variable", e)
            if den.constant == 0:
                self.err("malformed number: division by zero", e)
            return num.scale(1 / den.constant)
        if op in RELATIONS or op in ("and", "or", "not", "=>", "distinct", "xor"):
            self.err(f"sort mismatch: {op} yields Bool, expected a number", e)
        self.err(f"unknown symbol {op!r}", head)

    # formulas
    def formula(self, e):
        if isinstance(e, Tok):
            if e.text == "true":
                return BoolConst(True)
            if e.text == "false":
                return BoolConst(False)
            sort = self.sorts.get(e.text)
            if sort is None:
                if parse_number(e.text) is not None:
                    self.err("sort mismatch: number used as a formula", e)
                self.err(f"unknown symbol {e.text!r}", e)
            if sort is not Sort.BOOL:
                self.err(f"sort mismatch: {e.text} is not Bool", e)
            return BoolVar(e.text)
        if not e.items:
            self.err("empty formula", e)
        head = e.items[0]
        if not isinstance(head, Tok):
            self.err("expected an operator", e)
        op, args = head.text, e.items[1:]
        if op == "not":
            if len(args) != 1:
                self.err("arity error: not takes one argument", e)
            return NotE(self.formula(args[0]))
        if op in ("and", "or"):
            kids = tuple(self.formula(a) for a in args)
            return AndE(kids) if op == "and" else OrE(kids)
        if op == "=>":
            if len(args) < 2:
                self.err("arity error: => takes two or more arguments", e)
            kids = [self.formula(a) for a in args]
            out = kids[-1]
            for k in reversed(kids[:-1]):
                out = OrE((NotE(k), out))
            return out
        if op == "xor":
            if len(args) != 2:
                self.err("arity error: xor takes two arguments", e)
            a, b = self.formula(args[0]), self.formula(args[1])
            return OrE((AndE((a, NotE(b))), AndE((NotE(a), b))))
        if op in RELATIONS or op == "distinct":
            if len(args) < 2:
                self.err(f"arity error: {op} takes two or more arguments", e)
            if op in ("=", "distinct") and self._is_bool(args[0]):
                kids = [self.formula(a) for a in args]
                pairs = [AndE((OrE((NotE(a), b)), OrE((a, NotE(b))))) for a, b in zip(kids, kids[1:])]
                eq = pairs[0] if len(pairs) == 1 else AndE(tuple(pairs))
                return eq if op == "=" else NotE(eq)
            terms = [self.term(a) for a in args]
            if op == "distinct":
                parts = []
                for i in range(len(terms)):
                    for j in range(i + 1, len(terms)):
                        d = terms[i] - terms[j]
                        parts.append(OrE((Cmp(d, "<"), Cmp(-d, "<"))))
                return parts[0] if len(parts) == 1 else AndE(tuple(parts))
            cmps = tuple(Cmp(a - b, op) for a, b in zip(terms, terms[1:]))
            return cmps[0] if len(cmps) == 1 else AndE(cmps)
        if op in ("+", "-", "*", "/"):
            self.err(f"sort mismatch: {op} yields a number, expected Bool", e)
        self.err(f"unknown symbol {op!r}", head)

    def _is_bool(self, e) -> bool:
        if isinstance(e, Tok):
            return e.text in ("true", "false") or self.sorts.get(e.text) is Sort.BOOL
        if e.items and isinstance(e.items[0], Tok):
            return e.items[0].text in ("and", "or", "not", "=>", "xor", "distinct") + RELATIONS
        return False

    # commands
    def _count(self, args, e) -> int:
        if not args:
            return 1
        if len(args) != 1 or not isinstance(args[0], Tok) or not args[0].text.isdigit():
            self.err("expected a numeral", e)
        return int(args[0].text)

    def _number(self, node) -> Fraction:
        t = self.term(node)
        if not t.is_constant():
            self.err("expected a numeric constant", node if hasattr(node, "line") else node)
        return t.constant

    def command(self, e):
        if isinstance(e, Tok) or not e.items or not isinstance(e.items[0], Tok):
            self.err("expected a command", e)
        name, args = e.items[0].text, e.items[1:]
        if name == "declare-fun" or name == "declare-const":
            if name == "declare-fun":
                if len(args) != 3 or not isinstance(args[1], SList) or args[1].items:
                    self.err("arity error: expected (declare-fun <name> () <sort>)", e)
                sym, sort = args[0], args[2]
            else:
                if len(args) != 2:
                    self.err("arity error: expected (declare-const <name> <sort>)", e)
                sym, sort = args
            if not isinstance(sym, Tok) or not isinstance(sort, Tok):
                self.err("malformed declaration", e)
            if sort.text not in SORTS:
                self.err(f"unknown sort {sort.text!r}", sort)
            if sym.text in self.sorts:
                self.err(f"symbol {sym.text!r} already declared", sym)
            if parse_number(sym.text) is not None or sym.text in ("true", "false"):
                self.err(f"invalid symbol name {sym.text!r}", sym)
            self.sorts[sym.text] = SORTS[sort.text]
            return DeclareFun(sym.text, SORTS[sort.text])
        if name == "assert":
            if len(args) != 1:
                self.err("arity error: assert takes one argument", e)
            return Assert(self.formula(args[0]))
        if name in ("minimize", "maximize"):
            if not args:
                self.err(f"arity error: {name} needs a term", e)
            term = self.term(args[0])
            label = sexpr_text(args[0])
            lower = upper = None
            rest = args[1:]
            if len(rest) % 2:
                self.err("attribute without value", e)
            for key, val in zip(rest[::2], rest[1::2]):
                if not isinstance(key, Tok):
                    self.err("expected an attribute", key)
                if key.text == ":lower":
                    lower = self._number(val)
                elif key.text == ":upper":
                    upper = self._number(val)
                elif key.text == ":id":
                    if not isinstance(val, Tok):
                        self.err("expected a symbol", val)
                    label = val.text
                else:
                    self.err(f"unknown attribute {key.text!r}", key)
            return Minimize(term, label, name == "maximize", lower, upper)
        if name == "push":
            n = self._count(args, e)
            self.depth += n
            return Push(n)
        if name == "pop":
            n = self._count(args, e)
            if n > self.depth:
                self.err("pop exceeds push depth", e)
            self.depth -= n
            return Pop(n)
        if name in ("check-sat", "get-objectives", "get-model", "exit"):
            if args:
                self.err(f"arity error: {name} takes no arguments", e)
            return {"check-sat": CheckSat, "get-objectives": GetObjectives,
                    "get-model": GetModel, "exit": Exit}[name]()
        if name == "set-option":
            if len(args) != 2 or not isinstance(args[0], Tok):
                self.err("arity error: expected (set-option :key value)", e)
            return SetOption(args[0].text, sexpr_text(args[1]))
        if name in ("set-logic", "set-info"):
            return SetOption(":" + name, " ".join(sexpr_text(a) for a in args))
        self.err(f"unknown command {name!r}", e.items[0])


def parse_script(text) -> Script:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc}") from exc
    p = _Parser()
    return Script([p.command(e) for e in read_sexprs(text)])


# -- printing ---------------------------------------------------------------------

def render_number(q: Fraction) -> str:
    q = Fraction(q)
    if q < 0:
        return f"(- {render_rational(-q)})"
    return render_rational(q)


def render_term(t: LinearTerm) -> str:
    parts = []
    for v, c in t.coeffs:
        parts.append(v if c == 1 else f"(* {render_number(c)} {v})")
    if t.constant != 0 or not parts:
        parts.append(render_number(t.constant))
    return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"


def render_expr(e) -> str:
    if isinstance(e, BoolConst):
        return "true" if e.value else "false"
    if isinstance(e, BoolVar):
        return e.name
    if isinstance(e, Cmp):
        return f"({e.rel} {render_term(e.term)} 0)"
    if isinstance(e, NotE):
        return f"(not {render_expr(e.arg)})"
    op = "and" if isinstance(e, AndE) else "or"
    return f"({op} " + " ".join(render_expr(a) for a in e.args) + ")" if e.args else f"({op})"


SORT_NAMES = {v: k for k, v in SORTS.items()}


def render_command(c) -> str:
    if isinstance(c, DeclareFun):
        return f"(declare-fun {c.name} () {SORT_NAMES[c.sort]})"
    if isinstance(c, Assert):
        return f"(assert {render_expr(c.expr)})"
    if isinstance(c, Minimize):
        head = "maximize" if c.maximize else "minimize"
        out = f"({head} {render_term(c.term)}"
        if c.lower is not None:
            out += f" :lower {render_number(c.lower)}"
        if c.upper is not None:
            out += f" :upper {render_number(c.upper)}"
        name = c.name if _is_symbol(c.name) else "|" + c.name + "|"
        return out + f" :id {name})"
    if isinstance(c, Push):
        return f"(push {c.n})"
    if isinstance(c, Pop):
        return f"(pop {c.n})"
    if isinstance(c, SetOption):
        return f"(set-option {c.key} {c.value})"
    return {CheckSat: "(check-sat)", GetObjectives: "(get-objectives)",
            GetModel: "(get-model)", Exit: "(exit)"}[type(c)]


def _is_symbol(s: str) -> bool:
    return bool(s) and not any(ch.isspace() or ch in "()|;" for ch in s)


def print_script(s: Script) -> str:
    return "\n".join(render_command(c) for c in s.commands) + "\n"
