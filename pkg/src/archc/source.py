"""Source files and source spans."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    """A half-open byte range [start, end) in one file, with 1-based line/col."""

    file: str
    line: int
    col: int
    start: int
    end: int

    def merge(self, other: "Span") -> "Span":
        if other.start < self.start:
            return other.merge(self)
        return Span(self.file, self.line, self.col, self.start, max(self.end, other.end))

    def point(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


DUMMY_SPAN = Span("<builtin>", 1, 1, 0, 0)


class SourceFile:
    """One UTF-8 source file, with line lookup for diagnostics."""

    def __init__(self, name: str, text: str) -> None:
        self.name = name
        self.text = text
        self._line_starts = [0]
        for i, ch in enumerate(text):
            if ch == "\n":
                self._line_starts.append(i + 1)

    def line_text(self, line: int) -> str:
        idx = line - 1
        if idx < 0 or idx >= len(self._line_starts):
            return ""
        start = self._line_starts[idx]
        end = self.text.find("\n", start)
        if end < 0:
            end = len(self.text)
        return self.text[start:end]

    def span_at(self, start: int, end: int) -> Span:
        # binary search not needed at our file sizes
        line = 1
        col = start + 1
        for i, ls in enumerate(self._line_starts):
            if ls > start:
                break
            line = i + 1
            col = start - ls + 1
        return Span(self.name, line, col, start, end)
