"""Chunk splitting and recursive descent parsing.

A program file is a sequence of chunks separated by lines holding only "!".
Each chunk is a class definition directive, a method definition
(``Class >> selector-pattern`` header followed by the body), or an expression.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from livetx.errors import Diagnostic
from livetx.lang import lexer as lx
from livetx.lang.ast import (
    Assign, Block, Cascade, ClassDef, Lit, MethodAst, Name, Return, SelfRef,
    Send, SuperRef, Symbol, ThisProcessRef,
)

RESERVED = {"self", "super", "thisProcess", "nil", "true", "false"}


class ParseError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        self.diagnostic = diagnostic
        super().__init__(diagnostic.format())


@dataclass
class SourceChunk:
    kind: str  # "method" | "classdef" | "expression"
    text: str
    file: str
    line: int  # 1-based line of the chunk's first line in the file
    ast: object = None


@dataclass
class ParsedProgram:
    chunks: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(d.severity == "error" for d in self.diagnostics)


def split_chunks(source: str, filename: str = "<input>") -> list[SourceChunk]:
    """Split on separator lines. Chunks keep their original line numbers."""
    chunks = []
    current: list[str] = []
    start_line = 1
    for lineno, line in enumerate(source.split("\n"), start=1):
        if line.strip() == "!":
            text = "\n".join(current)
            if text.strip():
                chunks.append(SourceChunk("", text, filename, start_line))
            current = []
            start_line = lineno + 1
        else:
            current.append(line)
    text = "\n".join(current)
    if text.strip():
        chunks.append(SourceChunk("", text, filename, start_line))
    return chunks


def _classify(tokens) -> str:
    if len(tokens) >= 2 and tokens[0].type == lx.NAME and tokens[0].value == "class" \
            and tokens[1].type == lx.NAME:
        return "classdef"
    if len(tokens) >= 3 and tokens[0].type == lx.NAME and tokens[1].type == lx.BINOP \
            and tokens[1].value == ">>":
        return "method"
    return "expression"


def parse_program(source: str, filename: str = "<input>") -> ParsedProgram:
    """Parse every chunk. Bad chunks yield diagnostics, never silent drops."""
    program = ParsedProgram()
    for chunk in split_chunks(source, filename):
        try:
            parse_chunk(chunk)
        except (ParseError, lx.LexError) as err:
            program.diagnostics.append(err.diagnostic)
        else:
            program.chunks.append(chunk)
    return program


def parse_chunk(chunk: SourceChunk) -> SourceChunk:
    tokens = lx.tokenize(chunk.text, chunk.file, line_offset=chunk.line - 1)
    chunk.kind = _classify(tokens)
    parser = Parser(tokens, chunk.file)
    if chunk.kind == "classdef":
        chunk.ast = parser.parse_classdef()
    elif chunk.kind == "method":
        chunk.ast = parser.parse_method(chunk.text)
    else:
        chunk.ast = parser.parse_expression_chunk()
    return chunk


def parse_method_source(text: str, filename: str = "<input>", line: int = 1) -> MethodAst:
    chunk = SourceChunk("", text, filename, line)
    parse_chunk(chunk)
    if chunk.kind != "method":
        raise ParseError(Diagnostic(filename, line, 1, "error",
                                    "expected a method chunk (Class >> selector)"))
    return chunk.ast


def parse_expression_source(text: str, filename: str = "<eval>") -> MethodAst:
    chunk = SourceChunk("", text, filename, 1)
    parse_chunk(chunk)
    if chunk.kind != "expression":
        raise ParseError(Diagnostic(filename, 1, 1, "error", "expected an expression"))
    return chunk.ast


class Parser:
    def __init__(self, tokens, filename):
        self.tokens = tokens
        self.filename = filename
        self.pos = 0

    # -- token plumbing ------------------------------------------------

    @property
    def tok(self):
        return self.tokens[self.pos]

    def peek(self, offset=0):
        i = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[i]

    def advance(self):
        tok = self.tok
        if tok.type != lx.EOF:
            self.pos += 1
        return tok

    def at(self, ttype, value=None):
        return self.tok.type == ttype and (value is None or self.tok.value == value)

    def expect(self, ttype, what=None):
        if self.tok.type != ttype:
            self.error(what or f"expected {ttype}, found {self._describe(self.tok)}")
        return self.advance()

    def _describe(self, tok):
        if tok.type == lx.EOF:
            return "end of chunk"
        return repr(tok.value)

    def error(self, message, tok=None):
        tok = tok or self.tok
        raise ParseError(Diagnostic(self.filename, tok.line, tok.col, "error", message))

    # -- chunk level ---------------------------------------------------

    def parse_classdef(self) -> ClassDef:
        start = self.expect(lx.NAME)  # "class"
        name = self.expect(lx.NAME, "expected class name").value
        sup = "Object"
        if self.at(lx.NAME, "extends"):
            self.advance()
            sup = self.expect(lx.NAME, "expected superclass name").value
        fields = ()
        if self.at(lx.KEYWORD, "fields:"):
            self.advance()
            self.expect(lx.LPAREN, "expected ( after fields:")
            names = []
            while self.at(lx.NAME):
                names.append(self.advance().value)
            self.expect(lx.RPAREN, "expected ) closing field list")
            fields = tuple(names)
        self.expect(lx.EOF, "unexpected text after class definition")
        return ClassDef(line=start.line, col=start.col, name=name,
                        superclass=sup, fields=fields)

    def parse_method(self, source_text: str) -> MethodAst:
        owner_tok = self.expect(lx.NAME)
        self.expect(lx.BINOP)  # ">>", guaranteed by classification
        selector, params = self._parse_pattern()
        temps, body = self._parse_body()
        return MethodAst(line=owner_tok.line, col=owner_tok.col, owner=owner_tok.value,
                         selector=selector, params=tuple(params), temps=tuple(temps),
                         body=tuple(body))

    def _parse_pattern(self):
        if self.at(lx.KEYWORD):
            parts, params = [], []
            while self.at(lx.KEYWORD):
                parts.append(self.advance().value)
                params.append(self.expect(lx.NAME, "expected parameter name").value)
            return "".join(parts), params
        if self.at(lx.BINOP) or self.at(lx.PIPE):
            op = self.advance().value
            param = self.expect(lx.NAME, "expected parameter name").value
            return op, [param]
        tok = self.expect(lx.NAME, "expected selector")
        return tok.value, []

    def parse_expression_chunk(self) -> MethodAst:
        temps, body = self._parse_body()
        if not body:
            self.error("empty expression chunk")
        last = body[-1]
        if not isinstance(last, Return):
            # an expression chunk answers its final value
            body[-1] = Return(line=last.line, col=last.col, expr=last)
        return MethodAst(owner="", selector="doIt", params=(),
                         temps=tuple(temps), body=tuple(body))

    # -- statements ----------------------------------------------------

    def _parse_body(self):
        temps = []
        if self.at(lx.PIPE):
            self.advance()
            while self.at(lx.NAME):
                temps.append(self.advance().value)
            self.expect(lx.PIPE, "expected | closing temp declarations")
        body = []
        while not self.at(lx.EOF):
            body.append(self.parse_statement())
            if self.at(lx.DOT):
                self.advance()
            elif not self.at(lx.EOF):
                self.error(f"expected . or end of chunk, found {self._describe(self.tok)}")
        return temps, body

    def parse_statement(self):
        if self.at(lx.CARET):
            tok = self.advance()
            expr = self.parse_expression()
            return Return(line=tok.line, col=tok.col, expr=expr)
        return self.parse_expression()

    # -- expressions ---------------------------------------------------

    def parse_expression(self):
        if self.at(lx.NAME) and self.peek(1).type == lx.ASSIGN:
            name_tok = self.advance()
            if name_tok.value in RESERVED:
                self.error(f"cannot assign to {name_tok.value}", name_tok)
            self.advance()  # :=
            expr = self.parse_expression()
            return Assign(line=name_tok.line, col=name_tok.col,
                          name=name_tok.value, expr=expr)
        return self.parse_cascade()

    def parse_cascade(self):
        head = self.parse_keyword_expr()
        if not self.at(lx.SEMI):
            return head
        if not isinstance(head, Send):
            self.error("cascade requires a message send before ;")
        messages = []
        while self.at(lx.SEMI):
            self.advance()
            messages.append(self._parse_cascaded_message())
        return Cascade(line=head.line, col=head.col, head=head,
                       messages=tuple(messages))

    def _parse_cascaded_message(self):
        if self.at(lx.KEYWORD):
            parts, args = [], []
            while self.at(lx.KEYWORD):
                parts.append(self.advance().value)
                args.append(self.parse_binary_expr())
            return "".join(parts), tuple(args)
        if self.at(lx.BINOP) or self.at(lx.PIPE):
            op = self.advance().value
            return op, (self.parse_unary_expr(),)
        tok = self.expect(lx.NAME, "expected message after ;")
        if tok.value in RESERVED:
            self.error(f"{tok.value} is not a selector", tok)
        return tok.value, ()

    def parse_keyword_expr(self):
        receiver = self.parse_binary_expr()
        if not self.at(lx.KEYWORD):
            return receiver
        parts, args = [], []
        first = self.tok
        while self.at(lx.KEYWORD):
            parts.append(self.advance().value)
            args.append(self.parse_binary_expr())
        return Send(line=first.line, col=first.col, receiver=receiver,
                    selector="".join(parts), args=tuple(args))

    def parse_binary_expr(self):
        left = self.parse_unary_expr()
        while self.at(lx.BINOP) or self.at(lx.PIPE):
            op_tok = self.advance()
            right = self.parse_unary_expr()
            left = Send(line=op_tok.line, col=op_tok.col, receiver=left,
                        selector=op_tok.value, args=(right,))
        return left

    def parse_unary_expr(self):
        expr = self.parse_primary()
        while self.at(lx.NAME) and self.tok.value not in RESERVED \
                and self.peek(1).type != lx.ASSIGN:
            tok = self.advance()
            expr = Send(line=tok.line, col=tok.col, receiver=expr,
                        selector=tok.value, args=())
        return expr

    def parse_primary(self):
        tok = self.tok
        if tok.type in (lx.INT, lx.FLOAT, lx.STRING):
            self.advance()
            return Lit(line=tok.line, col=tok.col, value=tok.value)
        if tok.type == lx.SYMBOL:
            self.advance()
            return Lit(line=tok.line, col=tok.col, value=Symbol(tok.value))
        if tok.type == lx.HASHPAREN:
            self.advance()
            return Lit(line=tok.line, col=tok.col, value=self._parse_array_elements())
        if tok.type == lx.NAME:
            self.advance()
            if tok.value == "self":
                return SelfRef(line=tok.line, col=tok.col)
            if tok.value == "super":
                return SuperRef(line=tok.line, col=tok.col)
            if tok.value == "thisProcess":
                return ThisProcessRef(line=tok.line, col=tok.col)
            if tok.value == "nil":
                return Lit(line=tok.line, col=tok.col, value=None)
            if tok.value == "true":
                return Lit(line=tok.line, col=tok.col, value=True)
            if tok.value == "false":
                return Lit(line=tok.line, col=tok.col, value=False)
            return Name(line=tok.line, col=tok.col, id=tok.value)
        if tok.type == lx.LPAREN:
            self.advance()
            expr = self.parse_expression()
            self.expect(lx.RPAREN, "unbalanced parenthesis")
            return expr
        if tok.type == lx.LBRACKET:
            return self.parse_block()
        self.error(f"unexpected {self._describe(tok)}")

    def parse_block(self):
        open_tok = self.expect(lx.LBRACKET)
        params = []
        while self.at(lx.COLON):
            self.advance()
            params.append(self.expect(lx.NAME, "expected block parameter").value)
        if params:
            self.expect(lx.PIPE, "expected | after block parameters")
        temps = []
        if self.at(lx.PIPE):
            self.advance()
            while self.at(lx.NAME):
                temps.append(self.advance().value)
            self.expect(lx.PIPE, "expected | closing temp declarations")
        body = []
        while not self.at(lx.RBRACKET):
            if self.at(lx.EOF):
                self.error("unbalanced bracket", open_tok)
            body.append(self.parse_statement())
            if self.at(lx.DOT):
                self.advance()
            elif not self.at(lx.RBRACKET):
                self.error(f"expected . or ], found {self._describe(self.tok)}")
        self.advance()
        return Block(line=open_tok.line, col=open_tok.col, params=tuple(params),
                     temps=tuple(temps), body=tuple(body))

    def _parse_array_elements(self):
        elements = []
        while not self.at(lx.RPAREN):
            tok = self.advance()
            if tok.type in (lx.INT, lx.FLOAT, lx.STRING):
                elements.append(tok.value)
            elif tok.type == lx.SYMBOL:
                elements.append(Symbol(tok.value))
            elif tok.type == lx.KEYWORD:
                elements.append(Symbol(tok.value))
            elif tok.type == lx.NAME:
                if tok.value == "nil":
                    elements.append(None)
                elif tok.value == "true":
                    elements.append(True)
                elif tok.value == "false":
                    elements.append(False)
                else:
                    elements.append(Symbol(tok.value))
            elif tok.type == lx.BINOP or tok.type == lx.PIPE:
                elements.append(Symbol(tok.value))
            elif tok.type in (lx.LPAREN, lx.HASHPAREN):
                elements.append(self._parse_array_elements())
            elif tok.type == lx.EOF:
                self.error("unterminated array literal", tok)
            else:
                self.error(f"unexpected {self._describe(tok)} in array literal", tok)
        self.advance()
        return tuple(elements)
