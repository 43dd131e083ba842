"""Deterministic Rabin automaton model, parsers for the JSON schema and
the ltl2dstar v2 explicit text format, and finite-prefix acceptance
bookkeeping.

Symbols are canonicalized as frozensets of atomic propositions; the
serialized key for a symbol is the comma-joined sorted subset (the empty
string for the empty set).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import InvalidRun, InvariantViolation, ParseError

_DRA_KEYS = {"states", "ap", "start", "pairs", "trans"}


def symbol_key(symbol) -> str:
    return ",".join(sorted(symbol))


def parse_symbol_key(key: str) -> frozenset[str]:
    return frozenset(key.split(",")) if key else frozenset()


@dataclass(frozen=True)
class RabinPair:
    """Acceptance pair: visits to L must be finite, visits to K infinite.
    L may be empty; K may not."""

    L: frozenset[int]
    K: frozenset[int]


@dataclass(frozen=True)
class Dra:
    n_states: int
    ap: tuple[str, ...]
    start: int
    pairs: tuple[RabinPair, ...]
    delta: dict[tuple[int, frozenset[str]], int]

    def __post_init__(self):
        _validate(self)

    def step(self, state: int, symbol) -> int:
        return self.delta[(state, frozenset(symbol) & frozenset(self.ap))]

    def symbols(self) -> list[frozenset[str]]:
        out = []
        for bits in range(2 ** len(self.ap)):
            out.append(frozenset(a for b, a in enumerate(self.ap) if (bits >> b) & 1))
        return out


def _validate(dra: Dra):
    if not dra.pairs:
        raise InvariantViolation("a Rabin automaton needs at least one acceptance pair")
    if not 0 <= dra.start < dra.n_states:
        raise InvariantViolation(f"start state {dra.start} out of range")
    for k, pair in enumerate(dra.pairs):
        if not pair.K:
            raise InvariantViolation(f"acceptance pair {k} has an empty K set")
        for s in pair.L | pair.K:
            if not 0 <= s < dra.n_states:
                raise InvariantViolation(f"acceptance pair {k} references state {s}")
    symbols = dra.symbols()
    for q in range(dra.n_states):
        for sym in symbols:
            if (q, sym) not in dra.delta:
                raise InvariantViolation(
                    f"transition function undefined at state {q}, symbol "
                    f"{{{symbol_key(sym)}}}")
            succ = dra.delta[(q, sym)]
            if not 0 <= succ < dra.n_states:
                raise InvariantViolation(f"successor {succ} out of range at state {q}")


# ---------------------------------------------------------------------------
# JSON format
# ---------------------------------------------------------------------------

def from_json_dict(data: dict) -> Dra:
    unknown = set(data) - _DRA_KEYS
    if unknown:
        raise ParseError(f"unknown keys {sorted(unknown)}")
    missing = _DRA_KEYS - set(data)
    if missing:
        raise ParseError(f"missing keys {sorted(missing)}")
    n = int(data["states"])
    ap = tuple(data["ap"])
    ap_set = frozenset(ap)
    pairs = []
    for k, entry in enumerate(data["pairs"]):
        if set(entry) - {"L", "K"}:
            raise ParseError(f"unknown keys in pair {k}")
        pairs.append(RabinPair(L=frozenset(int(s) for s in entry.get("L", [])),
                               K=frozenset(int(s) for s in entry["K"])))
    delta = {}
    for state_key, row in data["trans"].items():
        try:
            q = int(state_key)
        except ValueError:
            raise ParseError(f"state key {state_key!r} is not an integer",
                             key=state_key) from None
        for sym_key, succ in row.items():
            sym = parse_symbol_key(sym_key)
            if not sym <= ap_set:
                raise ParseError(f"symbol {sym_key!r} uses undeclared propositions",
                                 key=sym_key)
            delta[(q, sym)] = int(succ)
    return Dra(n_states=n, ap=ap, start=int(data["start"]),
               pairs=tuple(pairs), delta=delta)


def parse_json(text: str) -> Dra:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    return from_json_dict(data)


def to_json_dict(dra: Dra) -> dict:
    trans: dict[str, dict[str, int]] = {}
    for q in range(dra.n_states):
        trans[str(q)] = {symbol_key(sym): dra.delta[(q, sym)] for sym in dra.symbols()}
    return {
        "states": dra.n_states,
        "ap": list(dra.ap),
        "start": dra.start,
        "pairs": [{"L": sorted(p.L), "K": sorted(p.K)} for p in dra.pairs],
        "trans": trans,
    }


# ---------------------------------------------------------------------------
# ltl2dstar v2 explicit format
# ---------------------------------------------------------------------------

def parse_ltl2dstar(text: str) -> Dra:
    """Parse the "DRA v2 explicit" text format.

    Per-state blocks carry an Acc-Sig line with +k / -k membership marks
    for K(k) / L(k), followed by 2^|AP| successor lines where bit b of
    the symbol index is the truth value of the b-th declared AP.
    """
    lines = text.splitlines()
    pos = 0

    def next_line():
        nonlocal pos
        while pos < len(lines):
            line = lines[pos].strip()
            pos += 1
            if line:
                return line, pos
        return None, pos

    line, lineno = next_line()
    if line is None or line.split() != ["DRA", "v2", "explicit"]:
        raise ParseError("unsupported version: expected 'DRA v2 explicit' header",
                         line=lineno)

    header: dict[str, str] = {}
    ap: list[str] = []
    while True:
        line, lineno = next_line()
        if line is None:
            raise ParseError("truncated header: missing state blocks", line=lineno)
        if line == "---":
            break
        if line.startswith("State:"):
            pos -= 1
            break
        if ":" not in line:
            raise ParseError(f"malformed header line {line!r}", line=lineno)
        key, _, value = line.partition(":")
        key = key.strip()
        value = value.strip()
        if key == "AP":
            parts = value.split()
            try:
                n_ap = int(parts[0])
            except (IndexError, ValueError):
                raise ParseError("malformed AP line", line=lineno) from None
            names = [p.strip('"') for p in parts[1:]]
            if len(names) != n_ap:
                raise ParseError(f"AP count {n_ap} does not match {len(names)} names",
                                 line=lineno)
            ap = names
        else:
            header[key] = value
    for required in ("States", "Acceptance-Pairs", "Start"):
        if required not in header:
            raise ParseError(f"missing header field {required!r}", line=lineno)
    try:
        n_states = int(header["States"])
        n_pairs = int(header["Acceptance-Pairs"])
        start = int(header["Start"])
    except ValueError as exc:
        raise ParseError(f"non-integer header field: {exc}", line=lineno) from exc

    symbols = []
    for bits in range(2 ** len(ap)):
        symbols.append(frozenset(a for b, a in enumerate(ap) if (bits >> b) & 1))

    delta: dict[tuple[int, frozenset[str]], int] = {}
    L = [set() for _ in range(n_pairs)]
    K = [set() for _ in range(n_pairs)]
    seen = set()
    while True:
        line, lineno = next_line()
        if line is None:
            break
        if not line.startswith("State:"):
            raise ParseError(f"expected a 'State:' block, got {line!r}", line=lineno)
        try:
            q = int(line.split()[1])
        except (IndexError, ValueError):
            raise ParseError("malformed State line", line=lineno) from None
        if not 0 <= q < n_states:
            raise ParseError(f"state index {q} out of range", line=lineno)
        if q in seen:
            raise ParseError(f"duplicate state block {q}", line=lineno)
        seen.add(q)
        line, lineno = next_line()
        if line is None or not line.startswith("Acc-Sig:"):
            raise ParseError(f"missing Acc-Sig line for state {q}", line=lineno)
        for mark in line[len("Acc-Sig:"):].split():
            if len(mark) < 2 or mark[0] not in "+-" or not mark[1:].isdigit():
                raise ParseError(f"malformed acceptance mark {mark!r}", line=lineno)
            idx = int(mark[1:])
            if idx >= n_pairs:
                raise ParseError(f"acceptance mark {mark!r} exceeds pair count",
                                 line=lineno)
            (K if mark[0] == "+" else L)[idx].add(q)
        for sym in symbols:
            line, lineno = next_line()
            if line is None:
                raise ParseError(
                    f"truncated state block {q}: expected {len(symbols)} successors",
                    line=lineno)
            try:
                succ = int(line)
            except ValueError:
                raise ParseError(
                    f"truncated state block {q}: expected a successor index, "
                    f"got {line!r}", line=lineno) from None
            if not 0 <= succ < n_states:
                raise ParseError(f"successor {succ} out of range", line=lineno)
            delta[(q, sym)] = succ
    if len(seen) != n_states:
        raise ParseError(f"found {len(seen)} state blocks, expected {n_states}",
                         line=lineno)
    pairs = tuple(RabinPair(L=frozenset(L[k]), K=frozenset(K[k])) for k in range(n_pairs))
    return Dra(n_states=n_states, ap=tuple(ap), start=start, pairs=pairs, delta=delta)


def load(path) -> Dra:
    """Load a DRA from either format, sniffing the header."""
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("DRA"):
        return parse_ltl2dstar(text)
    return parse_json(text)


# ---------------------------------------------------------------------------
# finite-prefix acceptance bookkeeping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairCounters:
    count_L: int
    count_K: int
    last_L_index: int  # -1 when L never visited


def acceptance_counters(dra: Dra, run) -> tuple[PairCounters, ...]:
    """Per-pair visit counts over a finite run (state sequence).

    The run must follow the transition function: consecutive states must
    be connected by some input symbol.
    """
    run = list(run)
    symbols = dra.symbols()
    successors = [set() for _ in range(dra.n_states)]
    for (q, _sym), q2 in dra.delta.items():
        successors[q].add(q2)
    for t in range(len(run) - 1):
        if run[t + 1] not in successors[run[t]]:
            raise InvalidRun(f"no symbol moves {run[t]} to {run[t + 1]} (position {t})")
    out = []
    for pair in dra.pairs:
        count_L = count_K = 0
        last_L = -1
        for t, q in enumerate(run):
            if q in pair.L:
                count_L += 1
                last_L = t
            if q in pair.K:
                count_K += 1
        out.append(PairCounters(count_L=count_L, count_K=count_K, last_L_index=last_L))
    return tuple(out)
