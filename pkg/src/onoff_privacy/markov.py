"""Two-state request chain over the sources A and B.

The chain is parametrized by the switch probabilities alpha = Pr(A -> B) and
beta = Pr(B -> A); its transition matrix is

    M = | 1 - alpha    alpha   |
        |   beta     1 - beta  |

Everything downstream depends on the chain only through closed forms derived
here: the t-step transition probabilities (whose transient part decays like
(1 - alpha - beta)^t), the stationary distribution (beta, alpha)/(alpha+beta),
and seeded path sampling.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .rng import Rng

NUM_SOURCES = 2


class Source(Enum):
    """Identity of one of the two message sources."""

    A = "A"
    B = "B"

    @property
    def index(self) -> int:
        return 0 if self is Source.A else 1

    def other(self) -> "Source":
        return Source.B if self is Source.A else Source.A

    def __str__(self) -> str:
        return self.value


SOURCES = (Source.A, Source.B)


class NonErgodicError(ValueError):
    """The chain has no unique stationary distribution."""


@dataclass(frozen=True)
class MarkovModel:
    """The request chain (alpha, beta); immutable, safe to share."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ValueError(f"alpha and beta must lie in [0, 1], got ({self.alpha}, {self.beta})")

    @property
    def switch_sum(self) -> float:
        """alpha + beta; which side of 1 it falls on selects the policy regime."""
        return self.alpha + self.beta

    @property
    def second_eigenvalue(self) -> float:
        """1 - alpha - beta, the chain's transient decay factor per step."""
        return 1.0 - self.alpha - self.beta

    def ergodic(self) -> bool:
        return not (self.alpha == 0.0 and self.beta == 0.0) and not (
            self.alpha == 1.0 and self.beta == 1.0
        )

    def transition_matrix(self) -> np.ndarray:
        return np.array(
            [[1.0 - self.alpha, self.alpha], [self.beta, 1.0 - self.beta]], dtype=float
        )

    def transition_prob(self, frm: Source, to: Source) -> float:
        """One-step transition probability, the (frm, to) entry of M."""
        if frm is Source.A:
            return self.alpha if to is Source.B else 1.0 - self.alpha
        return self.beta if to is Source.A else 1.0 - self.beta

    def t_step_prob(self, frm: Source, to: Source, t: int) -> float:
        """Entry (frm, to) of M^t in closed form.

        For alpha + beta > 0 the spectral decomposition gives
        Pr(X_t = A | X_0 = A) = (beta + alpha r^t) / (alpha + beta) with
        r = 1 - alpha - beta, and analogously for the other entries.
        t = 0 and the frozen chain (alpha = beta = 0) reduce to the identity.
        """
        if t < 0:
            raise ValueError(f"t must be >= 0, got {t}")
        s = self.switch_sum
        if t == 0 or s == 0.0:
            return 1.0 if frm is to else 0.0
        r = self.second_eigenvalue**t
        if frm is Source.A:
            p_to_a = (self.beta + self.alpha * r) / s
        else:
            p_to_a = (self.beta - self.beta * r) / s
        return p_to_a if to is Source.A else 1.0 - p_to_a

    def stationary(self) -> tuple[float, float]:
        """Stationary probabilities (of A, of B); requires an ergodic chain."""
        if not self.ergodic():
            raise NonErgodicError(f"no unique stationary distribution for {self}")
        s = self.switch_sum
        return (self.beta / s, self.alpha / s)


def sample_path(
    m: MarkovModel,
    initial: tuple[float, float] | None,
    length: int,
    seed: int | Rng,
) -> list[Source]:
    """Sample a request path of the given length, deterministic given the seed.

    ``initial`` is (Pr A, Pr B) for the first element; None means stationary.
    One uniform draw is consumed per step, via inverse-CDF in (A, B) order.
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    rng = seed if isinstance(seed, Rng) else Rng(seed)
    p = initial if initial is not None else m.stationary()
    path: list[Source] = []
    current = SOURCES[rng.choose(p)]
    path.append(current)
    for _ in range(length - 1):
        row = (m.transition_prob(current, Source.A), m.transition_prob(current, Source.B))
        current = SOURCES[rng.choose(row)]
        path.append(current)
    return path


def default_initial(m: MarkovModel) -> tuple[float, float]:
    """Stationary distribution when it exists, else uniform (frozen/alternating chains)."""
    return m.stationary() if m.ergodic() else (0.5, 0.5)
