import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onoff_privacy.markov import (
    MarkovModel,
    NonErgodicError,
    SOURCES,
    Source,
    default_initial,
    sample_path,
)

probs = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def test_transition_prob_reads_parameters():
    assert MarkovModel(0.2, 0.2).transition_prob(Source.A, Source.B) == 0.2
    assert MarkovModel(0.0, 0.0).transition_prob(Source.A, Source.A) == 1.0
    assert MarkovModel(0.3, 0.5).transition_prob(Source.B, Source.A) == 0.5


def test_rows_sum_to_one():
    m = MarkovModel(0.37, 0.81)
    for frm in Source:
        assert sum(m.transition_prob(frm, to) for to in Source) == pytest.approx(1.0, abs=1e-15)


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        MarkovModel(-0.1, 0.5)
    with pytest.raises(ValueError):
        MarkovModel(0.5, 1.1)


def test_t_step_examples():
    assert MarkovModel(0.2, 0.2).t_step_prob(Source.A, Source.A, 1) == pytest.approx(0.8, abs=1e-15)
    assert MarkovModel(0.5, 0.5).t_step_prob(Source.A, Source.A, 3) == pytest.approx(0.5, abs=1e-15)
    # Independent oracle: square the matrix numerically.
    m = MarkovModel(0.2, 0.2)
    expected = np.linalg.matrix_power(m.transition_matrix(), 2)[0, 0]
    assert expected == pytest.approx(0.68, abs=1e-12)
    assert m.t_step_prob(Source.A, Source.A, 2) == pytest.approx(expected, abs=1e-12)


@given(probs, probs, st.integers(min_value=0, max_value=12))
@settings(max_examples=200, deadline=None)
def test_t_step_matches_matrix_power(alpha, beta, t):
    m = MarkovModel(alpha, beta)
    power = np.linalg.matrix_power(m.transition_matrix(), t)
    for i, frm in enumerate(Source):
        row = [m.t_step_prob(frm, to, t) for to in Source]
        np.testing.assert_allclose(row, power[i], atol=1e-12)
        assert abs(sum(row) - 1.0) <= 1e-12


@pytest.mark.parametrize("m", [MarkovModel(0.2, 0.2), MarkovModel(0.3, 0.5), MarkovModel(0.7, 0.6)])
def test_t_step_deviation_decays_geometrically(m):
    pi_a = m.stationary()[0]
    ratio = abs(m.second_eigenvalue)
    devs = [abs(m.t_step_prob(Source.A, Source.A, t) - pi_a) for t in range(1, 9)]
    for d0, d1 in zip(devs, devs[1:]):
        assert abs(d1 / d0 - ratio) <= 1e-9


def test_stationary_examples():
    assert MarkovModel(0.2, 0.2).stationary() == pytest.approx((0.5, 0.5), abs=1e-15)
    # Independent oracle: solve pi M = pi numerically.
    m = MarkovModel(0.3, 0.1)
    vals, vecs = np.linalg.eig(m.transition_matrix().T)
    pi = np.real(vecs[:, np.argmin(np.abs(vals - 1))])
    pi /= pi.sum()
    np.testing.assert_allclose(pi, (0.25, 0.75), atol=1e-12)
    np.testing.assert_allclose(m.stationary(), pi, atol=1e-12)


def test_stationary_is_one_step_invariant():
    m = MarkovModel(0.13, 0.44)
    pi = np.array(m.stationary())
    np.testing.assert_allclose(pi @ m.transition_matrix(), pi, atol=1e-15)


@pytest.mark.parametrize("m", [MarkovModel(0.0, 0.0), MarkovModel(1.0, 1.0)])
def test_non_ergodic(m):
    assert not m.ergodic()
    with pytest.raises(NonErgodicError):
        m.stationary()
    assert default_initial(m) == (0.5, 0.5)


def test_sample_path_absorbing():
    path = sample_path(MarkovModel(0.0, 0.0), (1.0, 0.0), 5, seed=1)
    assert path == [Source.A] * 5


def test_sample_path_alternates():
    path = sample_path(MarkovModel(1.0, 1.0), (1.0, 0.0), 4, seed=1)
    assert path == [Source.A, Source.B, Source.A, Source.B]


def test_sample_path_law_of_large_numbers():
    m = MarkovModel(0.2, 0.2)
    path = sample_path(m, None, 100_000, seed=314159)
    frac_a = sum(s is Source.A for s in path) / len(path)
    assert abs(frac_a - m.stationary()[0]) < 0.01


def test_sample_path_deterministic_given_seed():
    m = MarkovModel(0.4, 0.1)
    assert sample_path(m, None, 50, seed=9) == sample_path(m, None, 50, seed=9)
    assert sample_path(m, None, 50, seed=9) != sample_path(m, None, 50, seed=10)


def test_sources():
    assert len(SOURCES) == 2
    assert Source.A.other() is Source.B and Source.B.other() is Source.A
