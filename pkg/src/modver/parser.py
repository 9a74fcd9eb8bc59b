"""Tokenizer and recursive-descent parser for programs, assertions, outlines
and proof files.

Grammar summary (EBNF, full version in README):

    program   ::= { decl } [ "main" "::" stmts ]
    decl      ::= IDENT [ "(" idents ")" ] "::" stmts
    stmts     ::= { annot } stmt { annot } { ";" { annot } stmt { annot } }
    stmt      ::= "skip" | target ":=" expr | idents ":=" exprs
                | "if" expr "then" stmts [ "else" stmts ] "fi"
                | "while" expr [ "inv" annot ] [ "bound" annot ] "do" stmts "od"
                | "begin" "local" idents ":=" exprs ";" stmts "end"
                | IDENT "(" [ exprs ] ")" [ "by" IDENT ]
                | "swap" "(" target "," target ")"
    annot     ::= "{" expr "}"
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import syntax as S
from .syntax import Binary, Expr, Unary, Var


class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0, filename: str = "<input>"):
        self.message = message
        self.line = line
        self.col = col
        self.filename = filename
        super().__init__(f"{filename}:{line}:{col}: {message}")


KEYWORDS = {
    "skip", "if", "then", "else", "fi", "while", "do", "od", "begin", "local", "end",
    "true", "false", "and", "or", "not", "forall", "exists", "in", "array", "sorted",
    "perm", "max", "min", "store", "swap", "inv", "bound", "by", "main",
}

_UNICODE = {
    "∧": "and", "∨": "or", "¬": "not", "→": "->", "≤": "<=", "≥": ">=", "≠": "!=",
    "∀": "forall", "∃": "exists", "−": "-",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>(\#|//)[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*'*)
  | (?P<z>@z)
  | (?P<sym>:=|::|<=|>=|!=|->|&&|\|\||[-+*<>=!:;,()\[\]{}?])
  | (?P<uni>[∧∨¬→≤≥≠∀∃−])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # int | ident | kw | sym | eof
    text: str
    line: int
    col: int


def tokenize(text: str, filename: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    line, line_start, i = 1, 0, 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise ParseError(f"unexpected character {text[i]!r}", line, i - line_start + 1, filename)
        kind = m.lastgroup
        tok = m.group()
        col = i - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("ws", "comment"):
            pass
        elif kind == "int":
            tokens.append(Token("int", tok, line, col))
        elif kind == "ident":
            tokens.append(Token("kw" if tok in KEYWORDS else "ident", tok, line, col))
        elif kind == "z":
            tokens.append(Token("ident", "@z", line, col))
        elif kind == "uni":
            word = _UNICODE[tok]
            tokens.append(Token("kw" if word in KEYWORDS else "sym", word, line, col))
        else:
            tok = {"&&": "and", "||": "or", "!": "not"}.get(tok, tok)
            tokens.append(Token("kw" if tok in KEYWORDS else "sym", tok, line, col))
        i = m.end()
    tokens.append(Token("eof", "", line, i - line_start + 1))
    return tokens


@dataclass
class Parser:
    tokens: list[Token]
    filename: str = "<input>"
    macros: dict[str, Expr] = field(default_factory=dict)
    i: int = 0

    # -- token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, *texts: str) -> bool:
        return self.tok.kind in ("sym", "kw") and self.tok.text in texts

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col, self.filename)

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def ident(self) -> str:
        if self.tok.kind != "ident" or self.tok.text == "@z":
            raise self.error(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        return self.advance().text

    def word(self, text: str) -> bool:
        """Accept a contextual keyword (lexed as an identifier)."""
        if self.tok.kind in ("ident", "kw") and self.tok.text == text:
            self.advance()
            return True
        return False

    def expect_word(self, text: str) -> None:
        if not self.word(text):
            raise self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")

    def pos(self) -> tuple[int, int]:
        return (self.tok.line, self.tok.col)

    def ident_list(self) -> tuple[str, ...]:
        names = [self.ident()]
        while self.at(","):
            self.advance()
            names.append(self.ident())
        return tuple(names)

    def expr_list(self) -> tuple[Expr, ...]:
        items = [self.expr()]
        while self.at(","):
            self.advance()
            items.append(self.expr())
        return tuple(items)

    # -- expressions and assertions ----------------------------------------

    def expr(self) -> Expr:
        if self.at("forall", "exists"):
            kind = self.advance().text
            if self.at("array"):
                self.advance()
                if kind != "exists":
                    raise self.error("only existential array quantification is supported")
                var = self.ident()
                self.expect(":")
                return S.ArrayExists(var, self.expr())
            var = self.ident()
            lo = hi = None
            if self.at("in"):
                self.advance()
                self.expect("[")
                lo = self.expr()
                self.expect(":")
                hi = self.expr()
                self.expect("]")
            self.expect(":")
            return S.Quant(kind, var, self.expr(), lo, hi)
        left = self.disjunction()
        if self.at("->"):
            self.advance()
            return Binary("->", left, self.expr())
        return left

    def disjunction(self) -> Expr:
        e = self.conjunction()
        while self.at("or"):
            self.advance()
            e = Binary("or", e, self._operand(self.conjunction))
        return e

    def conjunction(self) -> Expr:
        e = self.negation()
        while self.at("and"):
            self.advance()
            e = Binary("and", e, self._operand(self.negation))
        return e

    def _operand(self, sub):
        # a quantifier may close a chain of connectives: p and forall i: q
        if self.at("forall", "exists"):
            return self.expr()
        return sub()

    def negation(self) -> Expr:
        if self.at("not"):
            self.advance()
            if self.at("forall", "exists"):
                return Unary("not", self.expr())
            return Unary("not", self.negation())
        return self.comparison()

    def comparison(self) -> Expr:
        left = self.arith()
        if self.at("<", "<=", "=", "!=", ">", ">="):
            op = self.advance().text
            right = self.arith()
            match op:
                case ">":
                    return Binary("<", right, left)
                case ">=":
                    return Binary("<=", right, left)
                case "!=":
                    return Unary("not", Binary("=", left, right))
            return Binary(op, left, right)
        return left

    def arith(self) -> Expr:
        e = self.term()
        while self.at("+", "-"):
            op = self.advance().text
            e = Binary(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.at("*"):
            self.advance()
            e = Binary("*", e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.at("-"):
            self.advance()
            arg = self.unary()
            if isinstance(arg, S.Int):
                return S.Int(-arg.value)
            return Unary("neg", arg)
        return self.postfix()

    def postfix(self) -> Expr:
        start = self.tok
        e = self.primary()
        while self.at("["):
            is_macro = start.kind == "ident" and start.text in self.macros and self.tokens[self.i - 1] is start
            if is_macro or (start.text == "(" and self._bracket_has_assign()):
                e = self.substitution_suffix(e)
            elif isinstance(e, (Var, S.Store)):
                self.advance()
                idx = self.expr()
                self.expect("]")
                e = S.Index(e, idx)
            else:
                raise self.error("unexpected '['")
        return e

    def _bracket_has_assign(self) -> bool:
        depth = 0
        for t in self.tokens[self.i:]:
            if t.kind == "sym" and t.text in "([{":
                depth += 1
            elif t.kind == "sym" and t.text in ")]}":
                depth -= 1
                if depth == 0:
                    return False
            elif depth == 1 and t.kind == "sym" and t.text == ":=":
                return True
            elif t.kind == "eof":
                return False
        return False

    def substitution_suffix(self, e: Expr) -> Expr:
        from .assertions import substitute

        self.expect("[")
        targets = [self.subst_target()]
        while self.at(","):
            self.advance()
            targets.append(self.subst_target())
        self.expect(":=")
        values = self.expr_list()
        self.expect("]")
        if len(targets) != len(values):
            raise self.error("substitution lists differ in length")
        return substitute(e, dict(zip(targets, values)))

    def subst_target(self) -> Expr:
        name = self.ident()
        if self.at("["):
            self.advance()
            idx = self.expr()
            self.expect("]")
            return S.Index(Var(name), idx)
        return Var(name)

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return S.Int(int(t.text))
        if self.at("true", "false"):
            self.advance()
            return S.Bool(t.text == "true")
        if self.at("("):
            self.advance()
            e = self.expr()
            if self.at("?"):
                self.advance()
                then = self.expr()
                self.expect(":")
                else_ = self.expr()
                e = S.Cond(e, then, else_)
            self.expect(")")
            return e
        if self.at("max", "min"):
            op = self.advance().text
            self.expect("(")
            a = self.expr()
            self.expect(",")
            b = self.expr()
            self.expect(")")
            return Binary(op, a, b)
        if self.at("store"):
            self.advance()
            self.expect("(")
            a = self.array_term()
            self.expect(",")
            i = self.expr()
            self.expect(",")
            v = self.expr()
            self.expect(")")
            return S.Store(a, i, v)
        if self.at("sorted"):
            self.advance()
            self.expect("(")
            a = self.array_term()
            self.expect("[")
            lo = self.expr()
            self.expect(":")
            hi = self.expr()
            self.expect("]")
            self.expect(")")
            return S.Sorted(a, lo, hi)
        if self.at("perm"):
            self.advance()
            self.expect("(")
            a = self.array_term()
            self.expect(",")
            b = self.array_term()
            self.expect(",")
            self.expect("[")
            lo = self.expr()
            self.expect(":")
            hi = self.expr()
            self.expect("]")
            self.expect(")")
            return S.Perm(a, b, lo, hi)
        if t.kind == "ident":
            self.advance()
            if t.text in self.macros:
                return self.macros[t.text]
            return Var(t.text)
        raise self.error(f"expected expression, found {t.text or 'end of input'!r}")

    def array_term(self) -> Expr:
        if self.at("store"):
            return self.primary()
        return Var(self.ident())

    def annotation(self) -> S.Annot:
        p = self.pos()
        self.expect("{")
        e = self.expr()
        self.expect("}")
        return S.Annot(e, pos=p)

    # -- statements / outlines ---------------------------------------------

    def stmts(self) -> S.OSeq:
        items: list = []
        while self.at("{"):
            items.append(self.annotation())
        if self._stmt_start():
            items.append(self.stmt())
            while self.at("{"):
                items.append(self.annotation())
            while self.at(";"):
                self.advance()
                while self.at("{"):
                    items.append(self.annotation())
                items.append(self.stmt())
                while self.at("{"):
                    items.append(self.annotation())
        if not any(not isinstance(x, S.Annot) for x in items):
            raise self.error("expected a statement")
        return S.OSeq(tuple(items))

    def _stmt_start(self) -> bool:
        if self.at("skip", "if", "while", "begin", "swap"):
            return True
        return self.tok.kind == "ident" and self.tok.text != "@z"

    def stmt(self):
        p = self.pos()
        if self.at("skip"):
            self.advance()
            return S.OAtom(S.Skip(pos=p), pos=p)
        if self.at("if"):
            self.advance()
            cond = self.expr()
            self.expect("then")
            then = self.stmts()
            else_ = None
            if self.at("else"):
                self.advance()
                else_ = self.stmts()
            self.expect("fi")
            return S.OIf(cond, then, else_, pos=p)
        if self.at("while"):
            self.advance()
            cond = self.expr()
            inv = bound = None
            if self.at("inv"):
                self.advance()
                inv = self.annotation().assertion
            if self.at("bound"):
                self.advance()
                bound = self.annotation().assertion
            self.expect("do")
            body = self.stmts()
            self.expect("od")
            return S.OWhile(cond, body, inv, bound, pos=p)
        if self.at("begin"):
            self.advance()
            self.expect("local")
            if not (self.tok.kind == "ident"):
                raise self.error("block needs a non-empty list of local variables")
            names = self.ident_list()
            self.expect(":=")
            values = self.expr_list()
            if len(names) != len(values):
                raise self.error("local variables and initial values differ in number")
            self.expect(";")
            body = self.stmts()
            self.expect("end")
            return S.OBlock(names, values, body, pos=p)
        if self.at("swap"):
            self.advance()
            self.expect("(")
            u = self.target()
            self.expect(",")
            v = self.target()
            self.expect(")")
            return S.OAtom(S.Swap(u, v, pos=p), pos=p)
        name_tok = self.tok
        name = self.ident()
        if self.at("("):
            self.advance()
            args: tuple[Expr, ...] = ()
            if not self.at(")"):
                args = self.expr_list()
            self.expect(")")
            by = None
            if self.at("by"):
                self.advance()
                by = self.ident()
            return S.OCall(S.Call(name, args, pos=p), by, pos=p)
        if self.at("["):
            self.advance()
            idx = self.expr()
            self.expect("]")
            self.expect(":=")
            return S.OAtom(S.Assign(S.Index(Var(name), idx), self.expr(), pos=p), pos=p)
        if self.at(","):
            self.advance()
            names = (name,) + self.ident_list()
            self.expect(":=")
            values = self.expr_list()
            if len(names) != len(values):
                raise self.error("parallel assignment lists differ in length", name_tok)
            return S.OAtom(S.ParAssign(names, values, pos=p), pos=p)
        if self.at(":="):
            self.advance()
            return S.OAtom(S.Assign(Var(name), self.expr(), pos=p), pos=p)
        # a bare identifier is a parameterless call
        by = None
        if self.at("by"):
            self.advance()
            by = self.ident()
        return S.OCall(S.Call(name, (), pos=p), by, pos=p)

    def target(self) -> Expr:
        name = self.ident()
        if self.at("["):
            self.advance()
            idx = self.expr()
            self.expect("]")
            return S.Index(Var(name), idx)
        return Var(name)

    def plain_stmts(self) -> S.Stmt:
        o = self.stmts()
        if S.has_annotations(o):
            raise self.error("annotations are not allowed in program text")
        return S.strip(o)

    # -- programs -----------------------------------------------------------

    def program(self) -> S.Program:
        decls: list[S.Decl] = []
        main = None
        while self.tok.kind != "eof":
            p = self.pos()
            if self.at("main"):
                self.advance()
                self.expect("::")
                if main is not None:
                    raise self.error("duplicate main program")
                main = self.plain_stmts()
                continue
            name = self.ident()
            formals: tuple[str, ...] = ()
            if self.at("("):
                self.advance()
                if not self.at(")"):
                    formals = self.ident_list()
                self.expect(")")
            self.expect("::")
            decls.append(S.Decl(name, formals, self.plain_stmts(), pos=p))
        return S.Program(tuple(decls), main)


def parse_expr(text: str, macros: dict[str, Expr] | None = None) -> Expr:
    p = Parser(tokenize(text), macros=dict(macros or {}))
    e = p.expr()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    return e


parse_assertion = parse_expr


def parse_outline(text: str, macros: dict[str, Expr] | None = None) -> S.OSeq:
    p = Parser(tokenize(text), macros=dict(macros or {}))
    o = p.stmts()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    return o


def parse_stmt(text: str) -> S.Stmt:
    """Parse a statement; ``swap`` stays unexpanded."""
    p = Parser(tokenize(text))
    s = p.plain_stmts()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    return s


def parse_program(text: str, filename: str = "<input>") -> S.Program:
    """Parse program text, desugar one-armed conditionals and expand ``swap``."""
    from .lang import expand_program

    p = Parser(tokenize(text, filename), filename=filename)
    prog = p.program()
    return expand_program(prog)
