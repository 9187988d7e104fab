"""Closed-form theory: achievable rates, the induced query chain, and the
matching converse bound.

With the step privacy profile the best possible download rate is 1/2 while
privacy is ON and 1 / (1 + |1 - alpha - beta|^t) at OFF time t >= 1; for an
arbitrary ON/OFF sequence the exponent becomes the distance to the latest ON
time. The bound is met by the table policy, whose query process is itself a
Markov chain in which AB survives with probability |1 - alpha - beta| per
step.

The converse is reproduced as an actual computation, not transcribed
algebra: a tiny linear maximization over the two free masses of the
admissible joint table of (query class, reference, current request), with
transition probabilities taken from explicit matrix powers. Its optimum must
(and does) coincide with the closed form for every delta.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .markov import MarkovModel, Source
from .policy import PrivacyMode, latest_on_time

QUERY_ORDER = ("A", "B", "AB")


def pr_query_ab(m: MarkovModel, offset: int) -> float:
    """Probability that the query is still AB ``offset`` steps after an ON
    time: |1 - alpha - beta|^offset (1 at the ON time itself)."""
    if offset < 0:
        raise ValueError(f"offset must be >= 0, got {offset}")
    return abs(m.second_eigenvalue) ** offset


def theoretical_rate(m: MarkovModel, mode: PrivacyMode, t: int) -> float:
    """Capacity at time t: 1/2 when ON, 1/(1 + Pr(query = AB)) when OFF.

    OFF times with no ON time before them carry no constraint, so the rate
    is 1.
    """
    if mode.is_on(t):
        return 0.5
    r = latest_on_time(mode, t)
    if r is None:
        return 1.0
    return 1.0 / (1.0 + pr_query_ab(m, t - r))


@dataclass(frozen=True)
class QueryChain:
    """Transition law of the query process over (A, B, AB)."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        p = self.matrix
        if p.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got {p.shape}")
        if np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("rows must sum to 1")
        if p[0, 2] != 0.0 or p[1, 2] != 0.0:
            raise ValueError("AB must be unreachable from single-source queries")

    def row(self, q: str) -> np.ndarray:
        return self.matrix[QUERY_ORDER.index(q)]


def query_chain(m: MarkovModel) -> QueryChain:
    """The Markov chain the policy induces on successive queries.

    Single-source queries follow the request chain exactly; from AB the next
    query is AB with probability |1 - alpha - beta|, else it collapses onto a
    single source. The two regimes differ only in the AB row; they coincide
    at alpha + beta = 1.
    """
    a, b = m.alpha, m.beta
    if m.switch_sum <= 1.0:
        ab_row = [b, a, 1.0 - a - b]
    else:
        ab_row = [1.0 - a, 1.0 - b, a + b - 1.0]
    return QueryChain(np.array([[1.0 - a, a, 0.0], [b, 1.0 - b, 0.0], ab_row], dtype=float))


@dataclass(frozen=True)
class ConverseWitness:
    """Admissible joint table of (reference, current) x query class.

    ``joint[i, k]`` is the mass of row i in ((A,A), (A,B), (B,A), (B,B))
    order and class k in (only-A-decodable, only-B, both). ``p1`` and ``p2``
    are the free masses placed on the single-source classes for reference A;
    privacy forces reference B to carry them scaled by (1-delta)/delta.
    """

    delta: float
    p1: float
    p2: float
    joint: np.ndarray

    def __post_init__(self) -> None:
        j = self.joint
        if j.shape != (4, 3):
            raise ValueError(f"expected a 4x3 table, got {j.shape}")
        if np.any(j < -1e-15):
            raise ValueError("joint table entries must be nonnegative")
        if abs(j.sum() - 1.0) > 1e-12:
            raise ValueError("joint table must sum to 1")

    def min_normalized_length(self) -> float:
        """2 - Pr(single-source class) for this witness."""
        return 2.0 - (self.p1 + self.p2) / self.delta


def converse_witness(m: MarkovModel, t: int, delta: float) -> ConverseWitness:
    """Best admissible witness: maximize p1 + p2 under table nonnegativity.

    The t-step request probabilities are evaluated by explicit matrix power,
    keeping this path independent of the closed forms it validates. The two
    masses decouple, so each is the smaller of its two binding caps.
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie strictly inside (0, 1), got {delta}")
    step_t = np.linalg.matrix_power(m.transition_matrix(), t)
    paa, pab = float(step_t[0, 0]), float(step_t[0, 1])
    pba, pbb = float(step_t[1, 0]), float(step_t[1, 1])
    # Caps: row (A, x) holds at most the pair mass delta * P(x|A); row (B, x)
    # must absorb the scaled copy, capping p at delta * P(x|B).
    p1 = min(delta * paa, delta * pba)
    p2 = min(delta * pab, delta * pbb)
    joint = np.array(
        [
            [p1, 0.0, delta * paa - p1],
            [0.0, p2, delta * pab - p2],
            [(1 - delta) / delta * p1, 0.0, (1 - delta) * pba - (1 - delta) / delta * p1],
            [0.0, (1 - delta) / delta * p2, (1 - delta) * pbb - (1 - delta) / delta * p2],
        ]
    )
    return ConverseWitness(delta, p1, p2, joint)


def converse_min_length(m: MarkovModel, t: int, delta: float = 0.5) -> float:
    """Lower bound on expected answer length / L at OFF time t >= 1.

    Computed through the witness maximization; equals the closed form
    1 + |1 - alpha - beta|^t for every delta.
    """
    return converse_witness(m, t, delta).min_normalized_length()


def converse_min_length_closed_form(m: MarkovModel, t: int) -> float:
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    return 1.0 + abs(m.second_eigenvalue) ** t


@dataclass(frozen=True)
class RateCurve:
    """Capacity as a function of time for one model and privacy profile."""

    model: MarkovModel
    mode: PrivacyMode
    points: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        for t, rate in self.points:
            if not 0.0 < rate <= 1.0:
                raise ValueError(f"rate at t={t} outside (0, 1]: {rate}")
            if self.mode.is_on(t) and rate != 0.5:
                raise ValueError(f"rate at ON time t={t} must be 1/2, got {rate}")

    def rates(self) -> list[float]:
        return [r for _, r in self.points]


def rate_curve(m: MarkovModel, mode: PrivacyMode, times: Iterable[int]) -> RateCurve:
    return RateCurve(m, mode, tuple((t, theoretical_rate(m, mode, t)) for t in times))


def write_rate_curve_csv(curve: RateCurve, fp: IO[str]) -> None:
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(["t", "rate", "regime"])
    for t, rate in curve.points:
        writer.writerow([t, repr(rate), "on" if curve.mode.is_on(t) else "off"])
