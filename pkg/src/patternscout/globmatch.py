"""Gitignore-style glob matching over relative, slash-separated paths.

Grammar: ``*`` matches any run of characters within one path segment
(possibly empty), ``?`` exactly one character, ``[...]`` a character class
(``[!...]`` negates, ``-`` ranges), and a segment consisting solely of
``**`` matches zero or more whole segments. Matching is case-sensitive.
``/`` is never matched by a wildcard or class, and may not appear inside
a class.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .errors import GlobSyntaxError

_DOUBLESTAR = "**"


def _scan_class(pattern: str, start: int) -> int:
    """Return the index one past the closing ``]`` of the class at ``start``.

    ``start`` points at ``[``. Raises GlobSyntaxError if the class is
    never closed. A ``]`` directly after ``[`` or ``[!`` is a literal
    member, as in fnmatch.
    """
    i = start + 1
    if i < len(pattern) and pattern[i] == "!":
        i += 1
    if i < len(pattern) and pattern[i] == "]":
        i += 1
    while i < len(pattern) and pattern[i] != "]":
        i += 1
    if i >= len(pattern):
        raise GlobSyntaxError(pattern, start, "unterminated character class")
    return i + 1


def _class_matches(seg: str, start: int, end: int, ch: str) -> bool:
    """Test ``ch`` against the class body between ``[`` at start and ``]`` at end-1."""
    i = start + 1
    negate = False
    if seg[i] == "!":
        negate = True
        i += 1
    matched = False
    prev: str | None = None
    while i < end - 1:
        c = seg[i]
        if c == "-" and prev is not None and i + 1 < end - 1:
            lo, hi = prev, seg[i + 1]
            if lo <= ch <= hi:
                matched = True
            prev = None
            i += 2
            continue
        if c == ch:
            matched = True
        prev = c
        i += 1
    return matched != negate


def _match_segment(seg: str, text: str) -> bool:
    """Match one pre-validated segment pattern against one path segment."""
    pi = ti = 0
    star_pi = star_ti = -1
    n_pat, n_text = len(seg), len(text)
    while ti < n_text:
        if pi < n_pat:
            c = seg[pi]
            if c == "*":
                star_pi, star_ti = pi, ti
                pi += 1
                continue
            if c == "?":
                pi += 1
                ti += 1
                continue
            if c == "[":
                end = _scan_class(seg, pi)
                if _class_matches(seg, pi, end, text[ti]):
                    pi = end
                    ti += 1
                    continue
            elif c == text[ti]:
                pi += 1
                ti += 1
                continue
        if star_pi < 0:
            return False
        # backtrack: let the last * swallow one more character
        star_ti += 1
        pi = star_pi + 1
        ti = star_ti
    while pi < n_pat and seg[pi] == "*":
        pi += 1
    return pi == n_pat


def _validate_segment(pattern: str, seg: str, offset: int) -> None:
    if seg == "":
        raise GlobSyntaxError(pattern, offset, "empty path segment")
    if _DOUBLESTAR in seg and seg != _DOUBLESTAR:
        raise GlobSyntaxError(
            pattern, offset + seg.index(_DOUBLESTAR), "** must stand alone in its segment"
        )
    i = 0
    while i < len(seg):
        if seg[i] == "[":
            # re-raise with the position relative to the full pattern
            try:
                i = _scan_class(seg, i)
            except GlobSyntaxError:
                raise GlobSyntaxError(pattern, offset + i, "unterminated character class") from None
        else:
            i += 1


@dataclass(frozen=True)
class Glob:
    """A validated glob expression."""

    pattern: str
    segments: tuple[str, ...]

    def match(self, path: str) -> bool:
        """Test a relative slash-separated path against this glob."""
        parts = tuple(path.split("/"))
        segs = self.segments

        @lru_cache(maxsize=None)
        def rec(i: int, j: int) -> bool:
            if i == len(segs):
                return j == len(parts)
            if segs[i] == _DOUBLESTAR:
                if rec(i + 1, j):
                    return True
                return j < len(parts) and rec(i, j + 1)
            if j == len(parts):
                return False
            return _match_segment(segs[i], parts[j]) and rec(i + 1, j + 1)

        return rec(0, 0)


def compile_glob(pattern: str) -> Glob:
    """Validate a glob expression, reporting the offending position on error."""
    if pattern == "":
        raise GlobSyntaxError(pattern, 0, "empty pattern")
    segments = pattern.split("/")
    offset = 0
    for seg in segments:
        _validate_segment(pattern, seg, offset)
        offset += len(seg) + 1
    # collapse adjacent ** segments: they are equivalent and keeping them
    # would only slow the matcher down
    collapsed: list[str] = []
    for seg in segments:
        if seg == _DOUBLESTAR and collapsed and collapsed[-1] == _DOUBLESTAR:
            continue
        collapsed.append(seg)
    return Glob(pattern=pattern, segments=tuple(collapsed))


def glob_match(pattern: str, path: str) -> bool:
    """One-shot convenience wrapper around :func:`compile_glob`."""
    return compile_glob(pattern).match(path)
