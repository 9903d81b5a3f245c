"""Minimal SMT-LIB2 s-expression reader."""

from __future__ import annotations


class SmtParseError(Exception):
    pass


def tokenize(text: str):
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "()":
            yield ch
            i += 1
            continue
        if ch == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise SmtParseError("unterminated quoted symbol")
            yield text[i:j + 1]
            i = j + 1
            continue
        if ch == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 1
            yield text[i:j + 1]
            i = j + 1
            continue
        j = i
        while j < n and text[j] not in " \t\r\n();|\"":
            j += 1
        yield text[i:j]
        i = j


def parse_all(text: str) -> list:
    """Parse every top-level s-expression into nested lists of strings."""
    stack: list[list] = [[]]
    for tok in tokenize(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise SmtParseError("unbalanced )")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SmtParseError("unbalanced (")
    return stack[0]


def parse_bv_literal(tok) -> tuple[int, int] | None:
    """#b/#x literals and (_ bvN w) forms -> (value, width)."""
    if isinstance(tok, str):
        if tok.startswith("#b"):
            return int(tok[2:], 2), len(tok) - 2
        if tok.startswith("#x"):
            return int(tok[2:], 16), (len(tok) - 2) * 4
        return None
    if isinstance(tok, list) and len(tok) == 3 and tok[0] == "_" \
            and isinstance(tok[1], str) and tok[1].startswith("bv"):
        return int(tok[1][2:]), int(tok[2])
    return None
