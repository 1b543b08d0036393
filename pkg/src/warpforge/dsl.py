"""Parser and printer for the camera trajectory DSL.

Grammar::

    traj  := "trajectory" STRING "{" stmt* "}"
    stmt  := "frames" INT | "pivot" ("auto" | FLOAT)
           | "interp" ("slerp" | "linear") | kf
    kf    := "keyframe" INT "{" param* "}"
    param := ("yaw" | "pitch" | "roll") FLOAT "deg"
           | ("truck" | "pedestal" | "dolly") FLOAT

Comments run from ``#`` to end of line.  Defaults: pivot auto, interp slerp.
Unknown keywords are rejected at parse time; ordering and range rules
(strictly increasing keyframe indices starting at 0, positive frame count)
are enforced when the Trajectory is built.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .camera import Keyframe, Trajectory
from .errors import TrajectorySemanticError, TrajectorySyntaxError

__all__ = ["parse_trajectory", "format_trajectory"]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<string>"[^"\n]*")
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<lbrace>\{)
  | (?P<rbrace>\})
    """,
    re.VERBOSE,
)

_ANGLE_PARAMS = ("yaw", "pitch", "roll")
_SHIFT_PARAMS = ("truck", "pedestal", "dolly")


@dataclass(frozen=True)
class _Token:
    kind: str  # string | number | ident | lbrace | rbrace | eof
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise TrajectorySyntaxError(line, col, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        value = m.group()
        if kind == "newline":
            line += 1
            col = 1
        else:
            if kind not in ("ws", "comment"):
                tokens.append(_Token(kind, value, line, col))
            col += len(value)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self._tokens = tokens
        self._pos = 0

    def _peek(self) -> _Token:
        return self._tokens[self._pos]

    def _next(self) -> _Token:
        tok = self._tokens[self._pos]
        self._pos += 1
        return tok

    def _fail(self, tok: _Token, message: str):
        raise TrajectorySyntaxError(tok.line, tok.column, message)

    def _expect(self, kind: str, what: str) -> _Token:
        tok = self._next()
        if tok.kind != kind:
            self._fail(tok, f"expected {what}, got {tok.text!r}" if tok.text else f"expected {what}")
        return tok

    def _expect_keyword(self, word: str) -> _Token:
        tok = self._next()
        if tok.kind != "ident" or tok.text != word:
            self._fail(tok, f"expected {word!r}, got {tok.text!r}" if tok.text else f"expected {word!r}")
        return tok

    def _expect_int(self, what: str) -> int:
        tok = self._expect("number", what)
        if re.search(r"[.eE]", tok.text):
            self._fail(tok, f"{what} must be an integer, got {tok.text!r}")
        return int(tok.text)

    def _expect_float(self, what: str) -> float:
        tok = self._expect("number", what)
        return float(tok.text)

    def parse(self) -> Trajectory:
        self._expect_keyword("trajectory")
        name_tok = self._expect("string", "trajectory name string")
        name = name_tok.text[1:-1]
        self._expect("lbrace", "'{'")

        frame_count: int | None = None
        pivot: float | None = None
        pivot_seen = False
        interp: str | None = None
        keyframes: list[Keyframe] = []

        while True:
            tok = self._peek()
            if tok.kind == "rbrace":
                self._next()
                break
            if tok.kind == "eof":
                self._fail(tok, "unterminated trajectory block, expected '}'")
            if tok.kind != "ident":
                self._fail(tok, f"expected a statement keyword, got {tok.text!r}")
            word = tok.text
            if word == "frames":
                self._next()
                if frame_count is not None:
                    raise TrajectorySemanticError("duplicate 'frames' statement")
                frame_count = self._expect_int("frame count")
            elif word == "pivot":
                self._next()
                if pivot_seen:
                    raise TrajectorySemanticError("duplicate 'pivot' statement")
                pivot_seen = True
                nxt = self._next()
                if nxt.kind == "ident" and nxt.text == "auto":
                    pivot = None
                elif nxt.kind == "number":
                    pivot = float(nxt.text)
                else:
                    self._fail(nxt, f"expected 'auto' or a depth, got {nxt.text!r}")
            elif word == "interp":
                self._next()
                if interp is not None:
                    raise TrajectorySemanticError("duplicate 'interp' statement")
                nxt = self._next()
                if nxt.kind != "ident" or nxt.text not in ("slerp", "linear"):
                    self._fail(nxt, f"expected 'slerp' or 'linear', got {nxt.text!r}")
                interp = nxt.text
            elif word == "keyframe":
                self._next()
                keyframes.append(self._parse_keyframe())
            else:
                self._fail(tok, f"unknown keyword {word!r}")

        trailing = self._next()
        if trailing.kind != "eof":
            self._fail(trailing, f"unexpected input after trajectory: {trailing.text!r}")

        if frame_count is None:
            raise TrajectorySemanticError("trajectory must declare 'frames'")
        return Trajectory(
            name=name,
            frame_count=frame_count,
            keyframes=tuple(keyframes),
            pivot=pivot,
            interp_mode=interp or "slerp",
        )

    def _parse_keyframe(self) -> Keyframe:
        index = self._expect_int("keyframe index")
        self._expect("lbrace", "'{'")
        params: dict[str, float] = {}
        while True:
            tok = self._next()
            if tok.kind == "rbrace":
                break
            if tok.kind == "eof":
                self._fail(tok, "unterminated keyframe block, expected '}'")
            if tok.kind != "ident" or tok.text not in _ANGLE_PARAMS + _SHIFT_PARAMS:
                self._fail(tok, f"unknown keyframe parameter {tok.text!r}")
            if tok.text in params:
                raise TrajectorySemanticError(
                    f"duplicate parameter {tok.text!r} in keyframe {index}"
                )
            value = self._expect_float(f"{tok.text} value")
            if tok.text in _ANGLE_PARAMS:
                self._expect_keyword("deg")
            params[tok.text] = value
        return Keyframe(index=index, **params)


def parse_trajectory(text: str) -> Trajectory:
    """Parse DSL source into a validated Trajectory."""
    return _Parser(_tokenize(text)).parse()


def _fmt(value: float) -> str:
    # repr is the shortest exact form, so printed values re-parse bitwise
    return repr(float(value))


def format_trajectory(traj: Trajectory) -> str:
    """Pretty-print a Trajectory as DSL source that re-parses structurally equal."""
    lines = [f'trajectory "{traj.name}" {{']
    lines.append(f"  frames {traj.frame_count}")
    lines.append(f"  pivot {'auto' if traj.pivot is None else _fmt(traj.pivot)}")
    lines.append(f"  interp {traj.interp_mode}")
    for kf in traj.keyframes:
        params = []
        for attr in _ANGLE_PARAMS:
            v = getattr(kf, attr)
            if v != 0.0:
                params.append(f"{attr} {_fmt(v)} deg")
        for attr in _SHIFT_PARAMS:
            v = getattr(kf, attr)
            if v != 0.0:
                params.append(f"{attr} {_fmt(v)}")
        body = f" {' '.join(params)} " if params else " "
        lines.append(f"  keyframe {kf.index} {{{body}}}")
    lines.append("}")
    return "\n".join(lines) + "\n"
