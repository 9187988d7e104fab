"""Server side and end-to-end sessions.

The server is an honest-but-curious answer map: query A or B returns that
source's latest message (L symbols), AB returns both (2L). Sessions wire the
request chain, the query policy, and the answer map together, check that the
wanted message is actually decodable from every answer, and record the
per-step lengths that the rate estimates are built from.

Message payloads are regenerated pseudo-randomly from (seed, source, time)
instead of being stored, so long horizons cost no memory. Payload content is
irrelevant to both rate and privacy; only lengths and identities matter.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from math import sqrt
from typing import IO, Iterable, Iterator

import numpy as np

from . import _backend
from .markov import MarkovModel, SOURCES, Source, default_initial
from .policy import (
    ClientState,
    Explicit,
    PrivacyMode,
    Query,
    QUERIES,
    next_query,
)
from .rng import Rng, split_seed

DEFAULT_L = 64


class DecodabilityViolation(RuntimeError):
    """An answer did not contain the requested message (must never happen)."""


class OutOfRangeError(ValueError):
    """Not enough trace data at the requested time."""


@dataclass(frozen=True)
class Message:
    source: Source
    time: int
    payload: bytes
    length_symbols: int


@dataclass(frozen=True)
class Answer:
    """Messages returned for one query; length L per message."""

    messages: tuple[Message, ...]
    length_symbols: int

    def contains(self, source: Source, time: int) -> bool:
        return any(m.source is source and m.time == time for m in self.messages)


class MessageStore:
    """Deterministic message source: payload is a pure function of
    (store seed, source, time)."""

    def __init__(self, seed: int, L: int = DEFAULT_L):
        if L < 1:
            raise ValueError(f"L must be >= 1, got {L}")
        self._root = Rng(seed)
        self.L = L

    def message(self, source: Source, t: int) -> Message:
        z = 2 * t if t >= 0 else -2 * t - 1  # zigzag so negative times get distinct streams
        rng = self._root.split(2 * z + source.index)
        nbytes = (self.L + 7) // 8
        words = [rng.next_u32() for _ in range((nbytes + 3) // 4)]
        raw = b"".join(w.to_bytes(4, "big") for w in words)[:nbytes]
        # Zero any bits beyond L so the payload is exactly L bits long.
        extra = 8 * nbytes - self.L
        if extra:
            raw = raw[:-1] + bytes([raw[-1] & (0xFF << extra) & 0xFF])
        return Message(source, t, raw, self.L)


def answer(q: Query, t: int, store: MessageStore) -> Answer:
    """The server's answer map: one message for A or B, both for AB."""
    if q is Query.AB:
        msgs = (store.message(Source.A, t), store.message(Source.B, t))
    else:
        msgs = (store.message(Source(q.value), t),)
    return Answer(msgs, store.L * len(msgs))


@dataclass(frozen=True)
class TraceStep:
    time: int
    flag_on: bool
    request: Source
    query: Query
    answer_length: int
    decoded_ok: bool


@dataclass(frozen=True)
class SessionTrace:
    """Per-step record of one session; decoded_ok must be True throughout."""

    times: tuple[int, ...]
    flags: tuple[bool, ...]
    requests: tuple[Source, ...]
    queries: tuple[Query, ...]
    answer_lengths: tuple[int, ...]
    decoded_ok: tuple[bool, ...]
    L: int
    seed: int

    def steps(self) -> Iterator[TraceStep]:
        for i, t in enumerate(self.times):
            yield TraceStep(
                t,
                self.flags[i],
                self.requests[i],
                self.queries[i],
                self.answer_lengths[i],
                self.decoded_ok[i],
            )

    def covers(self, t: int) -> bool:
        return t in self.times


TRACE_COLUMNS = ("time", "flag", "request", "query", "answer_len")


def _step_row(step: TraceStep) -> dict:
    return {
        "time": step.time,
        "flag": "ON" if step.flag_on else "OFF",
        "request": str(step.request),
        "query": str(step.query),
        "answer_len": step.answer_length,
    }


def write_traces_csv(traces: Iterable[SessionTrace], fp: IO[str], with_run: bool = False) -> None:
    cols = (("run",) + TRACE_COLUMNS) if with_run else TRACE_COLUMNS
    writer = csv.DictWriter(fp, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    for run, trace in enumerate(traces):
        for step in trace.steps():
            row = _step_row(step)
            if with_run:
                row["run"] = run
            writer.writerow(row)


def write_traces_jsonl(traces: Iterable[SessionTrace], fp: IO[str], with_run: bool = False) -> None:
    for run, trace in enumerate(traces):
        for step in trace.steps():
            row = _step_row(step)
            if with_run:
                row = {"run": run, **row}
            fp.write(json.dumps(row) + "\n")


def session_window(mode: PrivacyMode, horizon: int, t_min: int | None = None) -> list[int]:
    """Times covered by a session: ``horizon`` steps from t_min (default -1
    for the step profile so the constant ON prefix is witnessed, 0 for
    explicit sequences, which are only defined from time 0)."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if isinstance(mode, Explicit):
        if t_min not in (None, 0):
            raise ValueError("explicit modes start at time 0")
        if horizon > len(mode.flags):
            raise ValueError(f"horizon {horizon} exceeds the {len(mode.flags)} flags")
        start = 0
    else:
        start = -1 if t_min is None else t_min
        if start > 0:
            raise ValueError("step mode sessions must include a time <= 0")
    return list(range(start, start + horizon))


def run_session(
    m: MarkovModel,
    mode: PrivacyMode,
    horizon: int,
    L: int = DEFAULT_L,
    seed: int = 0,
    t_min: int | None = None,
    initial: tuple[float, float] | None = None,
) -> SessionTrace:
    """Simulate one session; bit-identical output for identical arguments.

    Raises DecodabilityViolation if any answer fails to contain the
    requested message (which would be a bug, not a random event).
    """
    times = session_window(mode, horizon, t_min)
    init = initial if initial is not None else default_initial(m)
    root = Rng(seed)
    path_rng = root.split(0)  # request + policy draws; payloads use split(1)
    store = MessageStore(root.split(1).key, L)

    state = ClientState.fresh()
    current: Source | None = None
    flags, requests, queries, lengths, oks = [], [], [], [], []
    for t in times:
        if current is None:
            current = SOURCES[path_rng.choose(init)]
        else:
            row = (m.transition_prob(current, Source.A), m.transition_prob(current, Source.B))
            current = SOURCES[path_rng.choose(row)]
        flag = mode.is_on(t)
        q, state = next_query(state, flag, current, m, path_rng)
        ans = answer(q, t, store)
        ok = ans.contains(current, t) and ans.length_symbols == L * len(ans.messages)
        if not ok:
            raise DecodabilityViolation(f"answer at t={t} lacks the message of {current}")
        flags.append(flag)
        requests.append(current)
        queries.append(q)
        lengths.append(ans.length_symbols)
        oks.append(ok)
    return SessionTrace(
        tuple(times), tuple(flags), tuple(requests), tuple(queries),
        tuple(lengths), tuple(oks), L, seed,
    )


@dataclass(frozen=True)
class TraceBatch:
    """Column-oriented bundle of many sessions (requests/queries as int8
    arrays, source A/B -> 0/1 and query A/B/AB -> 0/1/2)."""

    times: tuple[int, ...]
    flags: tuple[bool, ...]
    requests: np.ndarray
    queries: np.ndarray
    L: int
    seed: int

    @property
    def runs(self) -> int:
        return self.requests.shape[0]

    def answer_lengths(self) -> np.ndarray:
        return np.where(self.queries == 2, 2 * self.L, self.L)

    def decodable(self) -> bool:
        q, x = self.queries, self.requests
        return bool(np.all((q == 2) | (q == x)))

    def session(self, i: int) -> SessionTrace:
        reqs = tuple(SOURCES[int(v)] for v in self.requests[i])
        qs = tuple(QUERIES[int(v)] for v in self.queries[i])
        lengths = tuple(2 * self.L if q is Query.AB else self.L for q in qs)
        oks = tuple(q.covers(x) for q, x in zip(qs, reqs))
        return SessionTrace(
            self.times, self.flags, reqs, qs, lengths, oks, self.L,
            split_seed(self.seed, i),
        )

    def sessions(self) -> Iterator[SessionTrace]:
        return (self.session(i) for i in range(self.runs))


def run_sessions(
    m: MarkovModel,
    mode: PrivacyMode,
    horizon: int,
    runs: int,
    L: int = DEFAULT_L,
    seed: int = 0,
    t_min: int | None = None,
    initial: tuple[float, float] | None = None,
) -> TraceBatch:
    """Simulate ``runs`` independent sessions through the active backend.

    Session i equals run_session(..., seed=split_seed(seed, i)) on the
    request/query streams; payloads are not materialized here.
    """
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    times = session_window(mode, horizon, t_min)
    init = initial if initial is not None else default_initial(m)
    flags = tuple(mode.is_on(t) for t in times)
    tables = _backend.table_stack(m, len(times))
    requests, queries = _backend.get().simulate_batch(
        m.alpha, m.beta, init[0],
        np.array(flags, dtype=np.uint8), tables, runs, seed & ((1 << 64) - 1),
    )
    batch = TraceBatch(tuple(times), flags, requests, queries, L, seed)
    if not batch.decodable():
        raise DecodabilityViolation("a batched answer lacks the requested message")
    return batch


@dataclass(frozen=True)
class RateEstimate:
    """Empirical download rate L / mean(answer length) with its delta-method
    standard error from the binomial variance of the AB indicator."""

    rate: float
    stderr: float
    n: int
    p_ab: float


def _estimate_from_ab(n_ab: int, n: int) -> RateEstimate:
    p = n_ab / n
    rate = 1.0 / (1.0 + p)
    se = sqrt(p * (1.0 - p) / n) / (1.0 + p) ** 2
    return RateEstimate(rate, se, n, p)


def empirical_rate(traces: TraceBatch | Iterable[SessionTrace], t: int) -> RateEstimate:
    """Rate estimate at time t from a batch or a collection of traces.

    Needs at least two traces covering t, otherwise OutOfRangeError.
    """
    if isinstance(traces, TraceBatch):
        if t not in traces.times:
            raise OutOfRangeError(f"no trace covers time {t}")
        if traces.runs < 2:
            raise OutOfRangeError(f"need at least 2 traces covering time {t}")
        j = traces.times.index(t)
        return _estimate_from_ab(int(np.sum(traces.queries[:, j] == 2)), traces.runs)
    n = 0
    n_ab = 0
    for trace in traces:
        if not trace.covers(t):
            continue
        j = trace.times.index(t)
        n += 1
        n_ab += trace.queries[j] is Query.AB
    if n < 2:
        raise OutOfRangeError(f"need at least 2 traces covering time {t}, found {n}")
    return _estimate_from_ab(n_ab, n)
