"""Tokenizer for the chunked Smalltalk-flavored surface syntax."""

from __future__ import annotations

from dataclasses import dataclass

from livetx.errors import Diagnostic

# Token types
NAME = "name"
KEYWORD = "keyword"  # trailing colon included, e.g. "at:"
BINOP = "binop"
INT = "int"
FLOAT = "float"
STRING = "string"
SYMBOL = "symbol"
LPAREN = "("
RPAREN = ")"
LBRACKET = "["
RBRACKET = "]"
HASHPAREN = "#("
DOT = "."
SEMI = ";"
CARET = "^"
PIPE = "|"
ASSIGN = ":="
COLON = ":"
EOF = "eof"

_OP_CHARS = set("+-*/\\~<>=&@%,?")
# Tokens that can end an operand; a '-' right after one of these is a binary
# minus, anywhere else it may start a negative number literal.
_OPERAND_ENDERS = {NAME, INT, FLOAT, STRING, SYMBOL, RPAREN, RBRACKET}


@dataclass
class Token:
    type: str
    value: object
    line: int
    col: int

    def __repr__(self) -> str:
        return f"Token({self.type!r}, {self.value!r}, {self.line}:{self.col})"


class LexError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        self.diagnostic = diagnostic
        super().__init__(diagnostic.format())


class Lexer:
    def __init__(self, text: str, filename: str = "<input>", line_offset: int = 0):
        self.text = text
        self.filename = filename
        self.pos = 0
        self.line = 1 + line_offset
        self.col = 1
        self.prev_type = None

    def error(self, message, line=None, col=None):
        raise LexError(
            Diagnostic(self.filename, line or self.line, col or self.col, "error", message)
        )

    def _advance(self, n=1):
        for _ in range(n):
            if self.pos < len(self.text):
                if self.text[self.pos] == "\n":
                    self.line += 1
                    self.col = 1
                else:
                    self.col += 1
                self.pos += 1

    def _peek(self, offset=0):
        i = self.pos + offset
        return self.text[i] if i < len(self.text) else ""

    def _skip_blank(self):
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch in " \t\r\n":
                self._advance()
            elif ch == '"':
                start_line, start_col = self.line, self.col
                self._advance()
                while True:
                    if self.pos >= len(self.text):
                        self.error("unterminated comment", start_line, start_col)
                    if self._peek() == '"':
                        if self._peek(1) == '"':  # doubled quote inside comment
                            self._advance(2)
                            continue
                        self._advance()
                        break
                    self._advance()
            else:
                return

    def tokens(self) -> list[Token]:
        out = []
        while True:
            tok = self.next_token()
            out.append(tok)
            if tok.type == EOF:
                return out

    def next_token(self) -> Token:
        self._skip_blank()
        line, col = self.line, self.col
        if self.pos >= len(self.text):
            return self._emit(Token(EOF, None, line, col))
        ch = self._peek()

        if ch.isalpha() or ch == "_":
            return self._emit(self._lex_word(line, col))
        if ch.isdigit():
            return self._emit(self._lex_number(line, col, negative=False))
        if ch == "-" and self._peek(1).isdigit() and self.prev_type not in _OPERAND_ENDERS:
            self._advance()
            return self._emit(self._lex_number(line, col, negative=True))
        if ch == "'":
            return self._emit(self._lex_string(line, col))
        if ch == "#":
            return self._emit(self._lex_hash(line, col))
        if ch == ":":
            if self._peek(1) == "=":
                self._advance(2)
                return self._emit(Token(ASSIGN, ":=", line, col))
            self._advance()
            return self._emit(Token(COLON, ":", line, col))
        if ch in "()[].;^":
            self._advance()
            mapping = {
                "(": LPAREN, ")": RPAREN, "[": LBRACKET, "]": RBRACKET,
                ".": DOT, ";": SEMI, "^": CARET,
            }
            return self._emit(Token(mapping[ch], ch, line, col))
        if ch == "|":
            # A lone pipe doubles as the temp delimiter and the OR operator;
            # the parser decides from position. "||" never appears.
            self._advance()
            return self._emit(Token(PIPE, "|", line, col))
        if ch in _OP_CHARS:
            run = ch
            self._advance()
            while self._peek() in _OP_CHARS and len(run) < 2:
                run += self._peek()
                self._advance()
            return self._emit(Token(BINOP, run, line, col))
        self.error(f"unexpected character {ch!r}", line, col)

    def _emit(self, tok: Token) -> Token:
        self.prev_type = tok.type
        return tok

    def _lex_word(self, line, col) -> Token:
        start = self.pos
        while self._peek().isalnum() or self._peek() == "_":
            self._advance()
        word = self.text[start:self.pos]
        # name directly followed by ':' (but not ':=') is a keyword part
        if self._peek() == ":" and self._peek(1) != "=":
            self._advance()
            return Token(KEYWORD, word + ":", line, col)
        return Token(NAME, word, line, col)

    def _lex_number(self, line, col, negative) -> Token:
        start = self.pos
        while self._peek().isdigit():
            self._advance()
        if self._peek() == "." and self._peek(1).isdigit():
            self._advance()
            while self._peek().isdigit():
                self._advance()
            value = float(self.text[start:self.pos])
            return Token(FLOAT, -value if negative else value, line, col)
        value = int(self.text[start:self.pos])
        return Token(INT, -value if negative else value, line, col)

    def _lex_string(self, line, col) -> Token:
        self._advance()
        parts = []
        while True:
            if self.pos >= len(self.text):
                self.error("unterminated string", line, col)
            ch = self._peek()
            if ch == "'":
                if self._peek(1) == "'":
                    parts.append("'")
                    self._advance(2)
                    continue
                self._advance()
                return Token(STRING, "".join(parts), line, col)
            parts.append(ch)
            self._advance()

    def _lex_hash(self, line, col) -> Token:
        self._advance()
        ch = self._peek()
        if ch == "(":
            self._advance()
            return Token(HASHPAREN, "#(", line, col)
        if ch.isalpha() or ch == "_":
            start = self.pos
            while self._peek().isalnum() or self._peek() == "_" or (
                self._peek() == ":" and self._peek(1) != "="
            ):
                self._advance()
            return Token(SYMBOL, self.text[start:self.pos], line, col)
        if ch in _OP_CHARS or ch == "|":
            start = self.pos
            self._advance()
            if self._peek() in _OP_CHARS and self.pos - start < 2:
                self._advance()
            return Token(SYMBOL, self.text[start:self.pos], line, col)
        self.error("malformed symbol literal", line, col)


def tokenize(text: str, filename: str = "<input>", line_offset: int = 0) -> list[Token]:
    return Lexer(text, filename, line_offset).tokens()
