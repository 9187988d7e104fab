"""Client-side randomized query policy.

While privacy is ON the client downloads everything (query AB). After
privacy turns OFF it keeps protecting the request made at the latest ON time
(the "reference"): as long as the previous query was AB, the next query is
drawn from a closed-form table conditioned on (reference, current request);
once a single-source query has been emitted, all later OFF queries name the
current request directly.

The table depends on the regime of s = alpha + beta:

  s < 1  (sticky requests)    AB can persist only when the current request
                              equals the reference,
  s > 1  (alternating)        AB persists on mismatched pairs at odd offsets
                              from the ON time and on matched pairs at even
                              offsets,
  s = 1  (independent)        queries name the request directly; nothing to
                              protect.

Offsets count steps since the latest ON time, so the same tables serve both
the step privacy profile (ON up to time 0) and arbitrary ON/OFF sequences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from typing import IO

import numpy as np

from .markov import MarkovModel, Source
from .rng import Rng


class Query(Enum):
    """Symbol sent to the server: one source, or both."""

    A = "A"
    B = "B"
    AB = "AB"

    @property
    def index(self) -> int:
        return _QUERY_INDEX[self]

    def covers(self, x: Source) -> bool:
        """Whether the answer to this query contains source x's message."""
        return self is Query.AB or self.value == x.value

    def __str__(self) -> str:
        return self.value


QUERIES = (Query.A, Query.B, Query.AB)
_QUERY_INDEX = {Query.A: 0, Query.B: 1, Query.AB: 2}


@dataclass(frozen=True)
class StepAtZero:
    """Privacy ON for t <= 0, OFF for t >= 1."""

    def is_on(self, t: int) -> bool:
        return t <= 0


@dataclass(frozen=True)
class Explicit:
    """Arbitrary finite ON/OFF sequence; flags[t] is the mode at time t >= 0."""

    flags: tuple[bool, ...]

    def __post_init__(self) -> None:
        if len(self.flags) == 0:
            raise ValueError("Explicit mode needs at least one flag")

    @classmethod
    def from_string(cls, text: str) -> "Explicit":
        """Parse 'YNNY'-style strings, Y = ON and N = OFF, index 0 = time 0."""
        if not text or any(c not in "YN" for c in text):
            raise ValueError(f"mode string must be nonempty over Y/N, got {text!r}")
        return cls(tuple(c == "Y" for c in text))

    def is_on(self, t: int) -> bool:
        if not 0 <= t < len(self.flags):
            raise ValueError(f"time {t} outside the flag sequence [0, {len(self.flags)})")
        return self.flags[t]

    def __str__(self) -> str:
        return "".join("Y" if f else "N" for f in self.flags)


PrivacyMode = StepAtZero | Explicit


def latest_on_time(mode: PrivacyMode, t: int) -> int | None:
    """Latest time <= t with privacy ON, or None if there is none."""
    if isinstance(mode, StepAtZero):
        return min(t, 0)
    for i in range(min(t, len(mode.flags) - 1), -1, -1):
        if mode.flags[i]:
            return i
    return None


class InconsistentHistoryError(ValueError):
    """The (reference, query, offset) combination has probability zero."""


@dataclass(frozen=True)
class PolicyTable:
    """Distribution of the next query given (reference, current request).

    ``probs[ref.index, cur.index, q.index]`` with queries ordered (A, B, AB).
    ``regime`` is one of "lt1", "even", "odd", "indep".
    """

    alpha: float
    beta: float
    regime: str
    probs: np.ndarray

    def __post_init__(self) -> None:
        p = self.probs
        if p.shape != (2, 2, 3):
            raise ValueError(f"expected a 2x2x3 table, got shape {p.shape}")
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("table entries must lie in [0, 1]")
        sums = p.sum(axis=2)
        if np.any(np.abs(sums - 1.0) > 1e-12):
            raise ValueError(f"table rows must sum to 1, got {sums}")

    def row(self, ref: Source, cur: Source) -> np.ndarray:
        return self.probs[ref.index, cur.index]

    def prob(self, ref: Source, cur: Source, q: Query) -> float:
        return float(self.probs[ref.index, cur.index, q.index])

    def support(self, ref: Source, cur: Source) -> list[Query]:
        return [q for q in QUERIES if self.prob(ref, cur, q) > 0.0]

    def sample(self, ref: Source, cur: Source, rng: Rng) -> Query:
        """One inverse-CDF draw over the fixed (A, B, AB) order."""
        return QUERIES[rng.choose(self.row(ref, cur))]

    def perturb(self, ref: Source, cur: Source, q: Query, delta: float) -> "PolicyTable":
        """Shift one entry by delta and renormalize the rest of the row
        proportionally across its remaining mass. Used by the audit's
        optimality probe; the result is a valid table but not the scheme's.
        """
        p = self.probs.copy()
        old = p[ref.index, cur.index, q.index]
        new = min(1.0, max(0.0, old + delta))
        rest = 1.0 - old
        if rest <= 0.0:
            raise ValueError("cannot renormalize a row whose remaining support is empty")
        scale = (1.0 - new) / rest
        p[ref.index, cur.index] *= scale
        p[ref.index, cur.index, q.index] = new
        return PolicyTable(self.alpha, self.beta, self.regime, p)

    def to_json_dict(self) -> dict:
        rows = {}
        for ref in Source:
            for cur in Source:
                rows[f"{ref},{cur}"] = {str(q): float(self.prob(ref, cur, q)) for q in QUERIES}
        return {"alpha": self.alpha, "beta": self.beta, "offset_parity": self.regime, "rows": rows}

    def to_json(self, fp: IO[str] | None = None) -> str:
        text = json.dumps(self.to_json_dict(), indent=2)
        if fp is not None:
            fp.write(text + "\n")
        return text


@lru_cache(maxsize=4096)
def table_for(m: MarkovModel, offset: int) -> PolicyTable:
    """Query table used ``offset`` steps after the latest ON time.

    Rows are indexed (reference, current request) and apply only when the
    previous query was AB. The three regimes (and the parity split for
    alpha + beta > 1) are what make the AB probability decay exactly like
    |1 - alpha - beta| per step while revealing nothing about the reference.
    """
    if offset < 1:
        raise ValueError(f"offset must be >= 1, got {offset}")
    a, b = m.alpha, m.beta
    s = m.switch_sum
    # Each randomized row carries mass on one direct query and on AB; build
    # it as (p, 1 - p) from a single clamped ratio so float rounding at the
    # regime boundary can never push an entry outside [0, 1].
    clamp = lambda p: min(1.0, max(0.0, p))
    if s == 1.0:
        # Independent requests: query the current request directly.
        probs = np.array(
            [[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]]
        )
        return PolicyTable(a, b, "indep", probs)
    if s < 1.0:
        # AB survives only on matched rows, with probability (1-a-b)/(1-ref's stay).
        pa = clamp(b / (1 - a))
        pb = clamp(a / (1 - b))
        probs = np.array(
            [
                [[pa, 0.0, 1.0 - pa], [0.0, 1.0, 0.0]],
                [[1.0, 0.0, 0.0], [0.0, pb, 1.0 - pb]],
            ]
        )
        return PolicyTable(a, b, "lt1", probs)
    pa = clamp((1 - a) / b)
    pb = clamp((1 - b) / a)
    if offset % 2 == 0:
        # AB survives on matched rows at even offsets ...
        probs = np.array(
            [
                [[pa, 0.0, 1.0 - pa], [0.0, 1.0, 0.0]],
                [[1.0, 0.0, 0.0], [0.0, pb, 1.0 - pb]],
            ]
        )
        return PolicyTable(a, b, "even", probs)
    # ... and on mismatched rows at odd offsets.
    probs = np.array(
        [
            [[1.0, 0.0, 0.0], [0.0, pb, 1.0 - pb]],
            [[pa, 0.0, 1.0 - pa], [0.0, 1.0, 0.0]],
        ]
    )
    return PolicyTable(a, b, "odd", probs)


def naive_table(m: MarkovModel) -> PolicyTable:
    """Strawman that queries the current request directly when OFF.

    Demonstrably leaks the reference for correlated requests; kept only so
    the audit can show the leakage.
    """
    probs = np.array([[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]])
    return PolicyTable(m.alpha, m.beta, "naive", probs)


@dataclass(frozen=True)
class ClientState:
    """Everything the policy conditions on between steps.

    ``reference_request`` is the request at the latest ON time,
    ``offset`` counts steps since then, and ``ever_on`` records whether any
    ON step happened yet (before that, no constraint binds).
    """

    reference_request: Source | None = None
    prev_query: Query | None = None
    offset: int = 0
    ever_on: bool = False

    @classmethod
    def fresh(cls) -> "ClientState":
        return cls()


def next_query(
    state: ClientState,
    flag_on: bool,
    current_request: Source,
    m: MarkovModel,
    rng: Rng,
) -> tuple[Query, ClientState]:
    """Advance the policy one step; consumes at most one draw from ``rng``."""
    if flag_on:
        return Query.AB, ClientState(
            reference_request=current_request, prev_query=Query.AB, offset=0, ever_on=True
        )
    if not state.ever_on or state.prev_query is not Query.AB:
        q = Query.A if current_request is Source.A else Query.B
    else:
        assert state.reference_request is not None
        table = table_for(m, state.offset + 1)
        q = table.sample(state.reference_request, current_request, rng)
    return q, replace(state, prev_query=q, offset=state.offset + 1)


def _reachable_queries(m: MarkovModel, ref: Source, offset: int) -> dict[Query, Source]:
    """Exact support of (Q, X) at ``offset`` steps after an ON step at which
    the request was ``ref``. Walks the policy's reachable (request, still-AB)
    states, so zero-probability table entries and frozen chains are honored.
    """
    if offset == 0:
        return {Query.AB: ref}
    # Reachable (request, previous query was AB) pairs after tau OFF steps.
    states: set[tuple[Source, bool]] = {(ref, True)}
    result: dict[Query, set[Source]] = {}
    for tau in range(1, offset + 1):
        table = table_for(m, tau)
        nxt: set[tuple[Source, bool]] = set()
        last = tau == offset
        for x_prev, was_ab in states:
            for x in Source:
                if m.transition_prob(x_prev, x) == 0.0:
                    continue
                queries = table.support(ref, x) if was_ab else [Query(x.value)]
                for q in queries:
                    if last:
                        result.setdefault(q, set()).add(x)
                    nxt.add((x, q is Query.AB))
        states = nxt
    out: dict[Query, Source] = {}
    for q, xs in result.items():
        # The scheme makes the request a function of (reference, query).
        assert len(xs) == 1, f"query {q} does not determine the request: {xs}"
        out[q] = next(iter(xs))
    return out


def decode_reference(ref: Source, q: Query, m: MarkovModel, offset: int) -> Source:
    """The request uniquely implied by (reference, query) at a given offset.

    Single-source queries reveal the request directly; AB implies the
    reference itself (or its opposite at odd offsets when alpha + beta > 1).
    Raises InconsistentHistoryError for pairs the scheme cannot produce.
    """
    if offset < 0:
        raise ValueError(f"offset must be >= 0, got {offset}")
    support = _reachable_queries(m, ref, offset)
    if q not in support:
        raise InconsistentHistoryError(
            f"query {q} cannot occur {offset} steps after an ON request {ref} "
            f"under ({m.alpha}, {m.beta})"
        )
    return support[q]
