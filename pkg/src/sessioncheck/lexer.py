"""Tokenizer shared by the `.ssn` and `.trace` grammars.

Line comments start with ``--``; strings are double-quoted with ``\\\"``
and ``\\\\`` escapes; newlines are plain whitespace.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["Token", "LexError", "KEYWORDS", "tokenize"]

KEYWORDS = frozenset(
    [
        "roles",
        "type",
        "protocol",
        "entry",
        "msg",
        "dep",
        "send",
        "read",
        "rec",
        "call",
        "then",
        "end",
        "by",
        "where",
        "literal",
        "next",
        "and",
        "or",
        "true",
        "false",
        "Int",
        "Bool",
        "Str",
    ]
)

# Longest match first.
_PUNCT = [
    "->",
    "=>",
    "==",
    "!=",
    "<=",
    "--",  # handled as comment, kept here for the scanner loop
    "<",
    ">",
    "[",
    "]",
    "{",
    "}",
    "(",
    ")",
    ",",
    ";",
    ":",
    "|",
    "=",
    ".",
    "+",
    "-",
    "*",
    "!",
    "_",
]


@dataclass(frozen=True)
class Token:
    kind: str  # keyword text, punct text, or one of: ident, int, string, eof
    text: str
    value: object  # str for ident/string, int for int, None otherwise
    line: int
    col: int
    offset: int

    @property
    def end_offset(self) -> int:
        return self.offset + len(self.text)


@dataclass(frozen=True)
class LexError:
    line: int
    col: int
    message: str


# Identifiers and numbers are ASCII only; unicode letters or digits are
# rejected rather than silently accepted by str.isalpha/isdigit.
def _is_letter(ch: str) -> bool:
    return "a" <= ch <= "z" or "A" <= ch <= "Z"


def _is_digit(ch: str) -> bool:
    return "0" <= ch <= "9"


def tokenize(text: str) -> tuple[list[Token], list[LexError]]:
    tokens: list[Token] = []
    errors: list[LexError] = []
    i = 0
    line = 1
    col = 1
    n = len(text)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            advance(1)
            continue
        if text.startswith("--", i):
            while i < n and text[i] != "\n":
                advance(1)
            continue
        start_line, start_col, start_off = line, col, i
        if _is_letter(ch):
            j = i
            while j < n and (_is_letter(text[j]) or _is_digit(text[j]) or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = word if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, word if kind == "ident" else None, start_line, start_col, start_off))
            advance(j - i)
            continue
        if _is_digit(ch):
            j = i
            while j < n and _is_digit(text[j]):
                j += 1
            word = text[i:j]
            tokens.append(Token("int", word, int(word), start_line, start_col, start_off))
            advance(j - i)
            continue
        if ch == '"':
            j = i + 1
            buf: list[str] = []
            ok = True
            while True:
                if j >= n or text[j] == "\n":
                    errors.append(LexError(start_line, start_col, "unterminated string literal"))
                    ok = False
                    break
                c = text[j]
                if c == "\\":
                    if j + 1 < n and text[j + 1] in ('"', "\\"):
                        buf.append(text[j + 1])
                        j += 2
                        continue
                    errors.append(LexError(start_line, start_col, "invalid string escape"))
                    ok = False
                    j += 1
                    continue
                if c == '"':
                    j += 1
                    break
                buf.append(c)
                j += 1
            raw = text[i:j]
            if ok:
                tokens.append(Token("string", raw, "".join(buf), start_line, start_col, start_off))
            advance(j - i)
            continue
        matched = False
        for p in _PUNCT:
            if text.startswith(p, i):
                if p == "--":
                    break  # unreachable; comments handled above
                tokens.append(Token(p, p, None, start_line, start_col, start_off))
                advance(len(p))
                matched = True
                break
        if matched:
            continue
        errors.append(LexError(start_line, start_col, f"unexpected character {ch!r}"))
        advance(1)

    tokens.append(Token("eof", "", None, line, col, i))
    return tokens, errors
