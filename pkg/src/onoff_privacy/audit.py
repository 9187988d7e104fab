"""Exact privacy and rate auditing by brute-force enumeration.

Instead of trusting the scheme's proofs, this module rebuilds the joint law
of (request path, query path) over a finite window exactly (float products of
exact table entries, zero-probability branches pruned) and then checks, atom
by atom:

  - leakage: the conditional mutual information between the protected
    requests and the current query given the visible query history, which
    the scheme must keep at zero for every time step;
  - the query process's transition law and Markovity;
  - the structural facts the proofs lean on (the request is a function of
    reference and query; requests are Markov given the past; the query
    depends on the past only through reference, request and previous query);
  - the exact download rate, serving as the oracle for the closed forms.

Windows are capped at 14 steps; the sweep sizes used by the acceptance
criteria stay well below that.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Mapping

import numpy as np

from . import _backend
from .analysis import query_chain, theoretical_rate
from .markov import MarkovModel, SOURCES, Source, default_initial
from .policy import (
    Explicit,
    PolicyTable,
    PrivacyMode,
    QUERIES,
    Query,
    StepAtZero,
    decode_reference,
    naive_table,
    table_for,
)

MAX_HORIZON = 14
LEAKAGE_TOLERANCE_BITS = 1e-10


class HorizonTooLargeError(ValueError):
    """Requested window exceeds the enumerable cap."""


def _window_flags(mode: PrivacyMode, horizon: int) -> tuple[bool, ...]:
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if horizon > MAX_HORIZON:
        raise HorizonTooLargeError(f"horizon {horizon} exceeds the cap of {MAX_HORIZON}")
    if isinstance(mode, Explicit) and horizon > len(mode.flags):
        raise ValueError(f"horizon {horizon} exceeds the {len(mode.flags)} flags")
    return tuple(mode.is_on(t) for t in range(horizon))


@dataclass(frozen=True)
class HistoryDistribution:
    """Exact joint law of request and query paths over times 0..horizon-1.

    Paths are stored encoded (request bit t, query base-3 digit t); the
    ``atoms`` view decodes them to strings like ("ABA", "AB,A,A").
    """

    model: MarkovModel
    mode: PrivacyMode
    horizon: int
    initial: tuple[float, float]
    flags: tuple[bool, ...]
    policy_label: str
    x_codes: np.ndarray
    q_codes: np.ndarray
    probs: np.ndarray

    @cached_property
    def atoms(self) -> Mapping[tuple[str, str], float]:
        out: dict[tuple[str, str], float] = {}
        for x, q, p in zip(self.x_codes, self.q_codes, self.probs):
            xs = "".join("B" if (int(x) >> t) & 1 else "A" for t in range(self.horizon))
            qs = ",".join(str(QUERIES[(int(q) // 3**t) % 3]) for t in range(self.horizon))
            out[(xs, qs)] = float(p)
        return out

    def request_bit(self, t: int) -> np.ndarray:
        return (self.x_codes >> t) & 1

    def query_digit(self, t: int) -> np.ndarray:
        return (self.q_codes // 3**t) % 3

    def query_prefix(self, t: int) -> np.ndarray:
        """Key encoding the queries strictly before t (constant 0 for t=0)."""
        return self.q_codes % 3**t

    def query_marginal(self, t: int) -> dict[Query, float]:
        self._check_time(t)
        d = self.query_digit(t)
        return {q: float(self.probs[d == q.index].sum()) for q in QUERIES}

    def pr_query(self, t: int, q: Query) -> float:
        return self.query_marginal(t)[q]

    def on_times(self, t: int) -> list[int]:
        return [i for i in range(t + 1) if self.flags[i]]

    def _check_time(self, t: int) -> None:
        if not 0 <= t < self.horizon:
            raise ValueError(f"time {t} outside the enumerated window [0, {self.horizon})")


def enumerate_joint(
    m: MarkovModel,
    mode: PrivacyMode,
    horizon: int,
    initial: tuple[float, float] | None = None,
    *,
    policy: str | PolicyTable = "scheme",
) -> HistoryDistribution:
    """Enumerate the joint law exactly through the active backend.

    ``policy`` selects the table scheme (default), the direct-query strawman
    ("naive"), or a fixed custom table applied at every offset.
    """
    flags = _window_flags(mode, horizon)
    init = initial if initial is not None else default_initial(m)
    if isinstance(policy, PolicyTable):
        table, label = policy, "custom"
    elif policy == "naive":
        table, label = naive_table(m), "naive"
    elif policy == "scheme":
        table, label = None, "scheme"
    else:
        raise ValueError(f"unknown policy {policy!r}")
    stack = _backend.table_stack(m, horizon, table)
    x_codes, q_codes, probs = _backend.get().enumerate_atoms(
        m.alpha, m.beta, init[0], np.array(flags, dtype=np.uint8), stack
    )
    dist = HistoryDistribution(
        m, mode, horizon, init, flags, label, x_codes, q_codes, probs
    )
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-10:
        raise AssertionError(f"atom probabilities sum to {total}, not 1")
    return dist


def _cond_mi(probs: np.ndarray, c: np.ndarray, v: np.ndarray, g: np.ndarray) -> float:
    kernel = _backend.get().cond_mi_bits
    as_keys = lambda arr: np.ascontiguousarray(arr, dtype=np.int64)
    return float(kernel(np.ascontiguousarray(probs), as_keys(c), as_keys(v), as_keys(g)))


def _pack_bits(dist: HistoryDistribution, times: list[int]) -> np.ndarray:
    keys = np.zeros(len(dist.probs), dtype=np.int64)
    for j, t in enumerate(times):
        keys |= dist.request_bit(t).astype(np.int64) << j
    return keys


@dataclass(frozen=True)
class LeakageEntry:
    """Leakage decomposition at one time step, all in bits.

    ``total`` is I(protected requests; current query | query history);
    ``latest_term`` isolates the request at the latest ON time and
    ``residual_term`` is what the earlier protected requests add given it.
    """

    time: int
    total: float
    latest_term: float
    residual_term: float


@dataclass(frozen=True)
class LeakageReport:
    model: MarkovModel
    flags: tuple[bool, ...]
    entries: tuple[LeakageEntry, ...]

    @property
    def per_t(self) -> dict[int, float]:
        return {e.time: e.total for e in self.entries}

    @property
    def max_leakage(self) -> float:
        return max(e.total for e in self.entries)

    @property
    def passed(self) -> bool:
        return self.max_leakage <= LEAKAGE_TOLERANCE_BITS

    def to_json_dict(self) -> dict:
        return {
            "model": {"alpha": self.model.alpha, "beta": self.model.beta},
            "mode": ["ON" if f else "OFF" for f in self.flags],
            "per_t": {str(e.time): e.total for e in self.entries},
            "max_leakage": self.max_leakage,
            "passed": self.passed,
        }

    def to_json(self, fp: IO[str] | None = None) -> str:
        text = json.dumps(self.to_json_dict(), indent=2)
        if fp is not None:
            fp.write(text + "\n")
        return text


def leakage(dist: HistoryDistribution, mode: PrivacyMode | None = None) -> LeakageReport:
    """Exact leakage at every window time, with its two-term decomposition.

    At each t the protected set is every ON time up to t within the window
    (the step profile's ON times before the window are redundant: its prefix
    queries are constant). No ON time yet means nothing to protect.
    """
    if mode is not None and mode != dist.mode:
        raise ValueError("mode does not match the enumerated distribution")
    entries = []
    for t in range(dist.horizon):
        on_times = dist.on_times(t)
        if not on_times:
            entries.append(LeakageEntry(t, 0.0, 0.0, 0.0))
            continue
        c = dist.query_prefix(t)
        g = dist.query_digit(t)
        total = _cond_mi(dist.probs, c, _pack_bits(dist, on_times), g)
        latest = on_times[-1]
        latest_bit = dist.request_bit(latest).astype(np.int64)
        latest_term = _cond_mi(dist.probs, c, latest_bit, g)
        rest = on_times[:-1]
        if rest:
            residual = _cond_mi(dist.probs, c * 2 + latest_bit, _pack_bits(dist, rest), g)
        else:
            residual = 0.0
        entries.append(LeakageEntry(t, total, latest_term, residual))
    return LeakageReport(dist.model, dist.flags, tuple(entries))


def oracle_rate(dist: HistoryDistribution, t: int) -> float:
    """Download rate at t straight from the atoms: 1 / (1 + Pr(query AB))."""
    dist._check_time(t)
    return 1.0 / (1.0 + dist.pr_query(t, Query.AB))


def _require_step(dist: HistoryDistribution) -> None:
    if not (dist.flags[0] and not any(dist.flags[1:])):
        raise ValueError("this check is defined for step-profile distributions")


def verify_query_chain(dist: HistoryDistribution, m: MarkovModel) -> float:
    """Max deviation of the enumerated query process from the predicted
    chain, including a direct second-order Markovity check."""
    _require_step(dist)
    if dist.policy_label != "scheme":
        raise ValueError("the query chain is predicted for the scheme policy only")
    predicted = query_chain(m).matrix
    worst = 0.0
    pair_conds: dict[int, np.ndarray] = {}
    for t in range(1, dist.horizon):
        prev = dist.query_digit(t - 1)
        cur = dist.query_digit(t)
        joint = np.zeros((3, 3))
        np.add.at(joint, (prev, cur), dist.probs)
        mass = joint.sum(axis=1)
        for i in range(3):
            if mass[i] <= 1e-15:
                continue
            row = joint[i] / mass[i]
            worst = max(worst, float(np.max(np.abs(row - predicted[i]))))
            pair_conds[t * 3 + i] = row
    for t in range(2, dist.horizon):
        prev2 = dist.query_digit(t - 2)
        prev = dist.query_digit(t - 1)
        cur = dist.query_digit(t)
        joint = np.zeros((9, 3))
        np.add.at(joint, (prev2 * 3 + prev, cur), dist.probs)
        mass = joint.sum(axis=1)
        for k in range(9):
            if mass[k] <= 1e-15:
                continue
            row = joint[k] / mass[k]
            worst = max(worst, float(np.max(np.abs(row - pair_conds[t * 3 + k % 3]))))
    return worst


@dataclass(frozen=True)
class PropositionReport:
    """Computational re-check of the three structural facts behind the
    privacy proof, over every positive-probability atom."""

    decode_violations: int
    decode_checked: int
    request_markov_bits: float
    query_locality_bits: float

    @property
    def passed(self) -> bool:
        return (
            self.decode_violations == 0
            and self.request_markov_bits <= LEAKAGE_TOLERANCE_BITS
            and self.query_locality_bits <= LEAKAGE_TOLERANCE_BITS
        )


def verify_propositions(dist: HistoryDistribution, m: MarkovModel) -> PropositionReport:
    _require_step(dist)
    if dist.policy_label != "scheme":
        raise ValueError("the propositions hold for the scheme policy only")
    x0 = dist.request_bit(0)
    violations = 0
    checked = 0
    for t in range(dist.horizon):
        xt = dist.request_bit(t)
        qt = dist.query_digit(t)
        seen: dict[tuple[int, int], int] = {}
        for i in range(len(dist.probs)):
            key = (int(x0[i]), int(qt[i]))
            val = int(xt[i])
            if seen.setdefault(key, val) != val:
                violations += 1
        for (x0_bit, q_idx), x_bit in seen.items():
            checked += 1
            decoded = decode_reference(SOURCES[x0_bit], QUERIES[q_idx], m, t)
            if decoded is not SOURCES[x_bit]:
                violations += 1
    p2 = 0.0
    p3 = 0.0
    for t in range(1, dist.horizon):
        hist = (dist.x_codes & ((1 << t) - 1)) * 3**t + dist.query_prefix(t)
        xt = dist.request_bit(t)
        p2 = max(p2, abs(_cond_mi(dist.probs, dist.request_bit(t - 1), hist, xt)))
        ctx = (xt * 2 + x0) * 3 + dist.query_digit(t - 1)
        p3 = max(p3, abs(_cond_mi(dist.probs, ctx, hist, dist.query_digit(t))))
    return PropositionReport(violations, checked, p2, p3)


# The six single-entry probes of the sticky-regime table: push mass between a
# direct query and AB on the matched rows (both directions), and inject AB
# onto the two deterministic rows.
PROBE_ENTRIES: tuple[tuple[Source, Source, Query, float], ...] = (
    (Source.A, Source.A, Query.A, +1.0),
    (Source.A, Source.A, Query.A, -1.0),
    (Source.B, Source.B, Query.B, +1.0),
    (Source.B, Source.B, Query.B, -1.0),
    (Source.A, Source.B, Query.AB, +1.0),
    (Source.B, Source.A, Query.AB, +1.0),
)


@dataclass(frozen=True)
class PerturbationProbe:
    """Outcome of auditing one perturbed table."""

    ref: Source
    current: Source
    query: Query
    delta: float
    max_leakage: float
    max_rate_drop: float
    violates_privacy: bool
    degrades_rate: bool

    @property
    def confirms_optimality(self) -> bool:
        return self.violates_privacy or self.degrades_rate


def probe_table_perturbations(
    m: MarkovModel,
    horizon: int = 5,
    magnitude: float = 0.05,
    leak_threshold: float = 1e-6,
) -> list[PerturbationProbe]:
    """Audit single-entry perturbations of the sticky-regime table.

    Every probe must either leak (above ``leak_threshold`` bits) or strictly
    lower the exact rate at some window time; otherwise the table would not
    be the unique optimum it is claimed to be.
    """
    base_table = table_for(m, 1)
    if base_table.regime != "lt1":
        raise ValueError("the perturbation probe targets the alpha + beta < 1 table")
    mode = StepAtZero()
    base = enumerate_joint(m, mode, horizon)
    base_rates = [oracle_rate(base, t) for t in range(1, horizon)]
    probes = []
    for ref, cur, q, sign in PROBE_ENTRIES:
        table = base_table.perturb(ref, cur, q, sign * magnitude)
        dist = enumerate_joint(m, mode, horizon, policy=table)
        report = leakage(dist)
        rates = [oracle_rate(dist, t) for t in range(1, horizon)]
        drop = max(b - r for b, r in zip(base_rates, rates))
        probes.append(
            PerturbationProbe(
                ref,
                cur,
                q,
                sign * magnitude,
                report.max_leakage,
                drop,
                violates_privacy=report.max_leakage > leak_threshold,
                degrades_rate=drop > 1e-12,
            )
        )
    return probes


def audit_model(
    m: MarkovModel,
    mode: PrivacyMode,
    horizon: int,
    initial: tuple[float, float] | None = None,
    *,
    policy: str | PolicyTable = "scheme",
) -> LeakageReport:
    """Enumerate and audit in one call (what the CLI's audit command runs)."""
    return leakage(enumerate_joint(m, mode, horizon, initial, policy=policy))


def rate_check(dist: HistoryDistribution) -> float:
    """Max |oracle - closed form| over the window (oracle equivalence)."""
    worst = 0.0
    for t in range(dist.horizon):
        worst = max(
            worst, abs(oracle_rate(dist, t) - theoretical_rate(dist.model, dist.mode, t))
        )
    return worst
