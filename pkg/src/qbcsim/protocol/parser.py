"""Parser for ``.qbc`` protocol scripts.

One statement per line (``;`` also separates statements), ``#`` starts a
comment. Declarations (``state``, ``unitary``, ``observable``) may appear
anywhere before first use. The per-round steps come first; the closing
``commit``/``reveal``/``verify`` steps run once after all rounds.

    protocol NAME
    rounds N
    state NAME = [a0, a1, ...]
    unitary NAME = [[...], ...]
    observable NAME = [[...], ...] : label, label, ...     (columns are eigenvectors)

    prepare P s1[:d1], s2[:d2] STATE
    send S FROM TO
    measure P OBS t1, t2 -> REC
    apply P U t1, t2
    choose P REC = lab[@w]: OP | lab[@w]: OP ...
    case P REC1, REC2 = v1, v2: OP | ...
    announce P REC == VALUE
    commit P REC 0: v, v | 1: v
    reveal P claim REC from REC given REC using TABLE
    verify P REC

where ``OP`` is ``measure OBS targets -> REC`` or ``apply U targets``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..engine import ObservableSpec, Party
from ..errors import OwnershipError, ScriptError, UnknownLabelError
from ..linalg import is_unitary
from . import builtins
from .literals import LiteralError, evaluate
from .nodes import (
    Announce,
    Apply,
    ApplyOp,
    Branch,
    Case,
    CaseArm,
    Choose,
    Commit,
    Measure,
    MeasureOp,
    Pos,
    Prepare,
    ProtocolScript,
    RecordInfo,
    Reveal,
    Send,
    Verify,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<ket>\|[A-Za-z0-9+\-]*>)
  | (?P<arrow>->)
  | (?P<eqeq>==)
  | (?P<weight>@[^:|]+)
  | (?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[,:|=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str, line: int, col0: int) -> list[Token]:
    tokens, i = [], 0
    while i < len(text):
        if text[i] == "[":
            depth, j = 0, i
            while j < len(text):
                depth += {"[": 1, "]": -1}.get(text[j], 0)
                if depth == 0:
                    break
                j += 1
            if depth != 0:
                raise ScriptError("unbalanced '[' in literal", line, col0 + i)
            tokens.append(Token("literal", text[i:j + 1], line, col0 + i))
            i = j + 1
            continue
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise ScriptError(f"unexpected character {text[i]!r}", line, col0 + i)
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), line, col0 + i))
        i = m.end()
    return tokens


def _statements(source: str):
    """Yield ``(line, column, text)`` for every non-empty statement."""
    for lineno, raw in enumerate(source.splitlines(), start=1):
        code = raw.split("#", 1)[0]
        start = 0
        for piece in code.split(";"):
            if piece.strip():
                col = start + (len(piece) - len(piece.lstrip())) + 1
                yield lineno, col, piece.strip()
            start += len(piece) + 1


class _Cursor:
    def __init__(self, tokens: list[Token], line: int, column: int):
        self.tokens = tokens
        self.i = 0
        self.line = line
        self.column = column

    def peek(self, offset: int = 0) -> Token | None:
        j = self.i + offset
        return self.tokens[j] if j < len(self.tokens) else None

    def error(self, message: str, tok: Token | None = None, cls=ScriptError):
        tok = tok or self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            col = last.column + len(last.text) if last else self.column
            return cls(message + " (at end of statement)", self.line, col)
        return cls(message, tok.line, tok.column)

    def next(self, kind: str | None = None, text: str | None = None, what: str = "") -> Token:
        tok = self.peek()
        if tok is None or (kind and tok.kind != kind) or (text and tok.text != text):
            expected = what or text or kind
            found = "end of statement" if tok is None else repr(tok.text)
            raise self.error(f"expected {expected}, found {found}", tok)
        self.i += 1
        return tok

    def accept(self, kind: str | None = None, text: str | None = None) -> Token | None:
        tok = self.peek()
        if tok is not None and (kind is None or tok.kind == kind) and (text is None or tok.text == text):
            self.i += 1
            return tok
        return None

    def at_end(self) -> bool:
        return self.i >= len(self.tokens)

    def done(self):
        if not self.at_end():
            raise self.error(f"unexpected {self.peek().text!r}")

    def names(self, what: str = "name") -> list[Token]:
        out = [self.next("name", what=what)]
        while self.accept("punct", ","):
            out.append(self.next("name", what=what))
        return out


def _parse_party(tok: Token) -> Party:
    try:
        party = Party.parse(tok.text)
    except UnknownLabelError:
        party = None
    if party not in (Party.ALICE, Party.BOB):
        raise ScriptError(f"expected party A or B, found {tok.text!r}", tok.line, tok.column)
    return party


class _Builder:
    """Accumulates declarations and steps while enforcing static rules."""

    def __init__(self):
        self.name = "protocol"
        self.rounds = 1
        self.states: dict[str, np.ndarray] = {}
        self.unitaries: dict[str, np.ndarray] = {}
        self.observables: dict[str, ObservableSpec] = {}
        self.records: dict[str, RecordInfo] = {}
        self.subsystems: dict[str, list] = {}  # name -> [dim, owner]
        self.steps: list = []
        self.announced: set[str] = set()
        self.phase = "rounds"
        self._builtin_obs = builtins.observables()

    # -- name resolution -------------------------------------------------

    def state(self, tok: Token) -> np.ndarray:
        if tok.text in self.states:
            return self.states[tok.text]
        if tok.text in builtins.STATES:
            self.states[tok.text] = builtins.STATES[tok.text]
            return self.states[tok.text]
        raise ScriptError(f"unknown state {tok.text!r}", tok.line, tok.column)

    def unitary_dim(self, tok: Token) -> int | None:
        if tok.text == builtins.IDENTITY:
            return None
        if tok.text not in self.unitaries:
            if tok.text in builtins.UNITARIES:
                self.unitaries[tok.text] = builtins.UNITARIES[tok.text]
            else:
                raise ScriptError(f"unknown unitary {tok.text!r}", tok.line, tok.column)
        return self.unitaries[tok.text].shape[0]

    def observable(self, tok: Token) -> ObservableSpec:
        if tok.text not in self.observables:
            if tok.text in self._builtin_obs:
                self.observables[tok.text] = self._builtin_obs[tok.text]
            else:
                raise ScriptError(f"unknown observable {tok.text!r}", tok.line, tok.column)
        return self.observables[tok.text]

    def record(self, tok: Token) -> RecordInfo:
        if tok.text not in self.records:
            raise ScriptError(f"unknown record {tok.text!r}", tok.line, tok.column)
        return self.records[tok.text]

    def targets(self, party: Party, toks: list[Token]) -> tuple[tuple[str, ...], int]:
        names = [t.text for t in toks]
        if len(set(names)) != len(names):
            raise ScriptError(f"repeated target in {names}", toks[0].line, toks[0].column)
        dim = 1
        for t in toks:
            if t.text not in self.subsystems:
                raise ScriptError(f"unknown subsystem {t.text!r}", t.line, t.column)
            d, owner = self.subsystems[t.text]
            if owner is not party:
                raise OwnershipError(
                    f"party {party.value} does not hold {t.text!r} (held by {owner.value})", t.line, t.column
                )
            dim *= d
        return tuple(names), dim

    def declare(self, tok: Token):
        if tok.text in self.states or tok.text in self.unitaries or tok.text in self.observables:
            raise ScriptError(f"{tok.text!r} is already declared", tok.line, tok.column)


def _literal(tok: Token):
    try:
        return evaluate(tok.text)
    except LiteralError as exc:
        raise ScriptError(str(exc), tok.line, tok.column) from None


def _polar(m: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def _parse_op(cur: _Cursor, b: _Builder, party: Party, group: dict[str, tuple[str, ...]]):
    kw = cur.next("name", what="'measure' or 'apply'")
    if kw.text == "measure":
        obs_tok = cur.next("name", what="observable")
        obs = b.observable(obs_tok)
        tgt_toks = cur.names("subsystem")
        targets, dim = b.targets(party, tgt_toks)
        if dim != obs.dim:
            raise ScriptError(
                f"observable {obs_tok.text!r} has dimension {obs.dim} but targets have {dim}", obs_tok.line, obs_tok.column
            )
        cur.next("arrow", what="'->'")
        rec = cur.next("name", what="record name")
        _define_measure_record(b, party, rec, obs.outcomes, group)
        return MeasureOp(obs_tok.text, targets, rec.text)
    if kw.text == "apply":
        u_tok = cur.next("name", what="unitary")
        udim = b.unitary_dim(u_tok)
        targets, dim = b.targets(party, cur.names("subsystem"))
        if udim is not None and udim != dim:
            raise ScriptError(f"unitary {u_tok.text!r} has dimension {udim} but targets have {dim}", u_tok.line, u_tok.column)
        return ApplyOp(u_tok.text, targets)
    raise cur.error(f"expected 'measure' or 'apply', found {kw.text!r}", kw)


def _define_measure_record(b: _Builder, party: Party, rec: Token, outcomes: tuple[str, ...], group: dict | None):
    if group is not None and rec.text in group:
        if group[rec.text] != outcomes:
            raise ScriptError(
                f"branches write record {rec.text!r} with different outcome labels", rec.line, rec.column
            )
        return
    _check_new_record(b, rec)
    b.records[rec.text] = RecordInfo(party, outcomes, "measure")
    if group is not None:
        group[rec.text] = outcomes


def _check_new_record(b: _Builder, rec: Token):
    if rec.text in b.records:
        raise ScriptError(f"record {rec.text!r} is already defined", rec.line, rec.column)
    if rec.text in b.subsystems:
        raise ScriptError(f"record {rec.text!r} clashes with a subsystem name", rec.line, rec.column)


def _stmt_prepare(cur, b: _Builder, pos):
    party = _parse_party(cur.next("name", what="party"))
    toks, dims = [], []
    while True:
        t = cur.next("name", what="subsystem")
        d = None
        if cur.accept("punct", ":"):
            d = int(cur.next("number", what="dimension").text)
        toks.append(t)
        dims.append(d)
        if not cur.accept("punct", ","):
            break
    st_tok = cur.accept("ket") or cur.next("name", what="state")
    cur.done()
    vec = b.state(st_tok)
    n = len(toks)
    if any(d is None for d in dims):
        if all(d is None for d in dims):
            root = round(vec.size ** (1.0 / n))
            if root**n != vec.size:
                raise ScriptError(
                    f"cannot split a {vec.size}-dimensional state over {n} subsystems; give dims as name:d",
                    st_tok.line, st_tok.column,
                )
            dims = [root] * n
        else:
            raise ScriptError("give a dimension for every subsystem or for none", toks[0].line, toks[0].column)
    if int(np.prod(dims)) != vec.size:
        raise ScriptError(
            f"state {st_tok.text!r} has dimension {vec.size}, subsystems need {int(np.prod(dims))}",
            st_tok.line, st_tok.column,
        )
    for t, d in zip(toks, dims):
        if t.text in b.subsystems:
            raise ScriptError(f"subsystem {t.text!r} already prepared", t.line, t.column)
        if t.text in b.records:
            raise ScriptError(f"subsystem {t.text!r} clashes with a record name", t.line, t.column)
        b.subsystems[t.text] = [d, party]
    return Prepare(party, tuple(t.text for t in toks), tuple(dims), st_tok.text, pos)


def _stmt_send(cur, b: _Builder, pos):
    sub = cur.next("name", what="subsystem")
    sender = _parse_party(cur.next("name", what="sender"))
    receiver = _parse_party(cur.next("name", what="receiver"))
    cur.done()
    if sub.text not in b.subsystems:
        raise ScriptError(f"unknown subsystem {sub.text!r}", sub.line, sub.column)
    if b.subsystems[sub.text][1] is not sender:
        raise OwnershipError(
            f"party {sender.value} cannot send {sub.text!r}, it is held by {b.subsystems[sub.text][1].value}",
            sub.line, sub.column,
        )
    if sender is receiver:
        raise ScriptError("sender and receiver are the same party", sub.line, sub.column)
    b.subsystems[sub.text][1] = receiver
    return Send(sub.text, sender, receiver, pos)


def _stmt_measure(cur, b, pos):
    party = _parse_party(cur.next("name", what="party"))
    obs_tok = cur.next("name", what="observable")
    obs = b.observable(obs_tok)
    targets, dim = b.targets(party, cur.names("subsystem"))
    if dim != obs.dim:
        raise ScriptError(
            f"observable {obs_tok.text!r} has dimension {obs.dim} but targets have {dim}", obs_tok.line, obs_tok.column
        )
    cur.next("arrow", what="'->'")
    rec = cur.next("name", what="record name")
    cur.done()
    _define_measure_record(b, party, rec, obs.outcomes, None)
    return Measure(party, MeasureOp(obs_tok.text, targets, rec.text), pos)


def _stmt_apply(cur, b, pos):
    party = _parse_party(cur.next("name", what="party"))
    u_tok = cur.next("name", what="unitary")
    udim = b.unitary_dim(u_tok)
    targets, dim = b.targets(party, cur.names("subsystem"))
    cur.done()
    if udim is not None and udim != dim:
        raise ScriptError(f"unitary {u_tok.text!r} has dimension {udim} but targets have {dim}", u_tok.line, u_tok.column)
    return Apply(party, ApplyOp(u_tok.text, targets), pos)


def _stmt_choose(cur, b: _Builder, pos):
    party = _parse_party(cur.next("name", what="party"))
    rec = cur.next("name", what="record name")
    _check_new_record(b, rec)
    cur.next("punct", "=")
    group: dict[str, tuple[str, ...]] = {}
    raw = []
    while True:
        lab = cur.next("name", what="branch label")
        w_tok = cur.accept("weight")
        weight = None
        if w_tok is not None:
            try:
                weight = evaluate(w_tok.text[1:])
            except LiteralError as exc:
                raise ScriptError(str(exc), w_tok.line, w_tok.column) from None
            if abs(weight.imag) > 0 or weight.real < 0:
                raise ScriptError("branch weight must be a nonnegative real", w_tok.line, w_tok.column)
            weight = weight.real
        cur.next("punct", ":")
        op = _parse_op(cur, b, party, group)
        raw.append((lab, weight, op))
        if not cur.accept("punct", "|"):
            break
    cur.done()
    labels = [lab.text for lab, _, _ in raw]
    if len(set(labels)) != len(labels):
        raise ScriptError("branch labels must be distinct", rec.line, rec.column)
    given = sum(w for _, w, _ in raw if w is not None)
    n_free = sum(1 for _, w, _ in raw if w is None)
    if n_free:
        rest = 1.0 - given
        if rest < -1e-9:
            raise ScriptError("branch weights exceed 1", rec.line, rec.column)
        weights = [w if w is not None else rest / n_free for _, w, _ in raw]
    else:
        weights = [w for _, w, _ in raw]
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ScriptError(f"branch weights sum to {sum(weights)!r}, not 1", rec.line, rec.column)
    total = sum(weights)
    branches = tuple(Branch(lab.text, w / total, op) for (lab, _, op), w in zip(raw, weights))
    b.records[rec.text] = RecordInfo(party, tuple(labels), "choice")
    return Choose(party, rec.text, branches, pos)


def _stmt_case(cur, b: _Builder, pos):
    party = _parse_party(cur.next("name", what="party"))
    ctrl_toks = cur.names("control record")
    infos = []
    for t in ctrl_toks:
        info = b.record(t)
        if info.owner is not party:
            raise OwnershipError(f"record {t.text!r} belongs to party {info.owner.value}", t.line, t.column)
        infos.append(info)
    cur.next("punct", "=")
    group: dict[str, tuple[str, ...]] = {}
    arms, seen = [], set()
    while True:
        key_toks = cur.names("case value")
        if len(key_toks) != len(ctrl_toks):
            raise cur.error(f"case key needs {len(ctrl_toks)} values", key_toks[0])
        for kt, info in zip(key_toks, infos):
            if kt.text not in info.outcomes:
                raise ScriptError(f"{kt.text!r} is not an outcome of the control record", kt.line, kt.column)
        key = tuple(t.text for t in key_toks)
        if key in seen:
            raise ScriptError(f"duplicate case {key}", key_toks[0].line, key_toks[0].column)
        seen.add(key)
        cur.next("punct", ":")
        arms.append(CaseArm(key, _parse_op(cur, b, party, group)))
        if not cur.accept("punct", "|"):
            break
    cur.done()
    missing = [k for k in itertools.product(*(i.outcomes for i in infos)) if k not in seen]
    if missing:
        raise ScriptError(f"case table has no entry for {missing}", ctrl_toks[0].line, ctrl_toks[0].column)
    return Case(party, tuple(t.text for t in ctrl_toks), tuple(arms), pos)


def _stmt_announce(cur, b: _Builder, pos):
    party = _parse_party(cur.next("name", what="party"))
    rec = cur.next("name", what="record")
    cur.next("eqeq", what="'=='")
    val = cur.next("name", what="outcome label")
    cur.done()
    info = b.record(rec)
    if info.owner is not party:
        raise OwnershipError(f"record {rec.text!r} belongs to party {info.owner.value}", rec.line, rec.column)
    if val.text not in info.outcomes:
        raise ScriptError(f"{val.text!r} is not an outcome of {rec.text!r}", val.line, val.column)
    b.announced.add(rec.text)
    return Announce(party, rec.text, val.text, pos)


def _stmt_commit(cur, b: _Builder, pos):
    party = _parse_party(cur.next("name", what="party"))
    rec = cur.next("name", what="record")
    info = b.record(rec)
    if info.owner is not party:
        raise OwnershipError(f"record {rec.text!r} belongs to party {info.owner.value}", rec.line, rec.column)
    sets = {}
    while True:
        bit = cur.next("number", what="bit 0 or 1")
        if bit.text not in ("0", "1") or bit.text in sets:
            raise ScriptError("each of bits 0 and 1 needs exactly one outcome set", bit.line, bit.column)
        cur.next("punct", ":")
        vals = cur.names("outcome label")
        for v in vals:
            if v.text not in info.outcomes:
                raise ScriptError(f"{v.text!r} is not an outcome of {rec.text!r}", v.line, v.column)
        sets[bit.text] = tuple(v.text for v in vals)
        if not cur.accept("punct", "|"):
            break
    cur.done()
    if set(sets) != {"0", "1"}:
        raise ScriptError("commit needs outcome sets for both bits", rec.line, rec.column)
    if set(sets["0"]) & set(sets["1"]):
        raise ScriptError("commit outcome sets overlap", rec.line, rec.column)
    return Commit(party, rec.text, (sets["0"], sets["1"]), pos)


def _stmt_reveal(cur, b: _Builder, pos):
    party = _parse_party(cur.next("name", what="party"))
    cur.next("name", "claim")
    claim = cur.next("name", what="record")
    cur.next("name", "from")
    source = cur.next("name", what="record")
    cur.next("name", "given")
    given = cur.next("name", what="record")
    cur.next("name", "using")
    table = cur.next("name", what="inference table")
    cur.done()
    c_info, s_info, g_info = b.record(claim), b.record(source), b.record(given)
    if s_info.owner is not party:
        raise OwnershipError(f"record {source.text!r} belongs to party {s_info.owner.value}", source.line, source.column)
    if c_info.owner is party:
        raise ScriptError("the claimed record must belong to the other party", claim.line, claim.column)
    if given.text not in b.announced:
        raise ScriptError(f"record {given.text!r} is never announced", given.line, given.column)
    try:
        tbl = builtins.inference_table(table.text)
    except KeyError:
        raise ScriptError(f"unknown inference table {table.text!r}", table.line, table.column) from None
    if set(c_info.outcomes) != set(tbl.claim_outcomes) or not set(s_info.outcomes) <= set(tbl.source_outcomes):
        raise ScriptError(f"records do not fit inference table {table.text!r}", table.line, table.column)
    return Reveal(party, claim.text, source.text, given.text, table.text, pos)


def _stmt_verify(cur, b: _Builder, pos):
    party = _parse_party(cur.next("name", what="party"))
    rec = cur.next("name", what="record")
    cur.done()
    info = b.record(rec)
    if info.owner is not party:
        raise OwnershipError(f"record {rec.text!r} belongs to party {info.owner.value}", rec.line, rec.column)
    reveals = [s for s in b.steps if isinstance(s, Reveal)]
    if not reveals or reveals[-1].claim != rec.text:
        raise ScriptError(f"no reveal step claims record {rec.text!r}", rec.line, rec.column)
    return Verify(party, rec.text, pos)


_ROUND = {
    "prepare": _stmt_prepare,
    "send": _stmt_send,
    "measure": _stmt_measure,
    "apply": _stmt_apply,
    "choose": _stmt_choose,
    "case": _stmt_case,
    "announce": _stmt_announce,
}
_FINAL = {"commit": _stmt_commit, "reveal": _stmt_reveal, "verify": _stmt_verify}


def _declaration(kw: str, cur: _Cursor, b: _Builder):
    name = cur.next("name", what="name")
    b.declare(name)
    cur.next("punct", "=")
    lit = cur.next("literal", what="'[' literal")
    value = _literal(lit)
    if not isinstance(value, np.ndarray):
        raise ScriptError("expected a bracketed literal", lit.line, lit.column)
    if kw == "state":
        cur.done()
        if value.ndim != 1:
            raise ScriptError("state literal must be a flat list", lit.line, lit.column)
        norm = np.linalg.norm(value)
        if abs(norm - 1) > 1e-6:
            raise ScriptError(f"state literal has norm {norm:.6g}", lit.line, lit.column)
        b.states[name.text] = value / norm
    elif kw == "unitary":
        cur.done()
        if value.ndim != 2 or value.shape[0] != value.shape[1]:
            raise ScriptError(f"unitary literal must be square, got shape {value.shape}", lit.line, lit.column)
        if not is_unitary(value, 1e-8):
            raise ScriptError(f"matrix {name.text!r} is not unitary", lit.line, lit.column)
        b.unitaries[name.text] = _polar(value)
    else:
        cur.next("punct", ":")
        labels = cur.names("outcome label")
        cur.done()
        if value.ndim != 2 or value.shape[0] != value.shape[1]:
            raise ScriptError(f"observable basis must be square, got shape {value.shape}", lit.line, lit.column)
        if len(labels) != value.shape[1]:
            raise ScriptError(
                f"{len(labels)} labels for {value.shape[1]} eigenvectors", labels[0].line, labels[0].column
            )
        if not is_unitary(value, 1e-8):
            raise ScriptError(f"eigenvectors of {name.text!r} are not orthonormal", lit.line, lit.column)
        b.observables[name.text] = ObservableSpec(name.text, _polar(value), tuple(t.text for t in labels))


def parse(text: str) -> ProtocolScript:
    """Parse script source into a :class:`ProtocolScript`.

    Raises ScriptError (or its subclass OwnershipError) carrying the line and
    column of the offending token.
    """
    b = _Builder()
    for line, col, stmt in _statements(text):
        cur = _Cursor(_tokenize(stmt, line, col), line, col)
        kw = cur.next("name", what="statement keyword")
        pos = Pos(kw.line, kw.column)
        if kw.text == "protocol":
            b.name = cur.next("name", what="protocol name").text
            cur.done()
        elif kw.text == "rounds":
            n = cur.next("number", what="round count")
            cur.done()
            if not n.text.isdigit() or int(n.text) < 1:
                raise ScriptError("rounds must be a positive integer", n.line, n.column)
            b.rounds = int(n.text)
        elif kw.text in ("state", "unitary", "observable"):
            _declaration(kw.text, cur, b)
        elif kw.text in _ROUND:
            if b.phase != "rounds":
                raise ScriptError(f"'{kw.text}' cannot follow the commit phase", kw.line, kw.column)
            b.steps.append(_ROUND[kw.text](cur, b, pos))
        elif kw.text in _FINAL:
            b.phase = "final"
            order = list(_FINAL)
            done = [type(s).__name__.lower() for s in b.steps if type(s).__name__.lower() in _FINAL]
            expected = order[len(done)] if len(done) < len(order) else None
            if kw.text != expected:
                raise ScriptError(f"'{kw.text}' out of order; expected {expected!r}", kw.line, kw.column)
            b.steps.append(_FINAL[kw.text](cur, b, pos))
        else:
            raise ScriptError(f"unknown statement {kw.text!r}", kw.line, kw.column)
    if not b.steps:
        raise ScriptError("script has no steps")
    return ProtocolScript(
        name=b.name,
        rounds=b.rounds,
        states=dict(b.states),
        unitaries=dict(b.unitaries),
        observables=dict(b.observables),
        records=dict(b.records),
        steps=tuple(b.steps),
        source=text,
    )


def parse_file(path) -> ProtocolScript:
    return parse(Path(path).read_text(encoding="utf-8"))
