import io

import numpy as np
import pytest

from onoff_privacy.markov import MarkovModel, Source
from onoff_privacy.policy import Explicit, Query, StepAtZero
from onoff_privacy.rng import split_seed
from onoff_privacy.server import (
    MessageStore,
    OutOfRangeError,
    answer,
    empirical_rate,
    run_session,
    run_sessions,
    session_window,
    write_traces_csv,
    write_traces_jsonl,
)


def test_answer_lengths():
    store = MessageStore(seed=1, L=8)
    a = answer(Query.A, 3, store)
    assert len(a.messages) == 1 and a.length_symbols == 8
    assert a.messages[0].source is Source.A and a.messages[0].time == 3
    ab = answer(Query.AB, 3, store)
    assert len(ab.messages) == 2 and ab.length_symbols == 16
    assert ab.contains(Source.A, 3) and ab.contains(Source.B, 3)
    tiny = answer(Query.B, -2, MessageStore(seed=1, L=1))
    assert tiny.length_symbols == 1


def test_payloads_are_a_function_of_source_and_time():
    store = MessageStore(seed=7, L=64)
    again = MessageStore(seed=7, L=64)
    assert store.message(Source.A, 5).payload == again.message(Source.A, 5).payload
    assert store.message(Source.A, 5).payload != store.message(Source.B, 5).payload
    assert store.message(Source.A, 5).payload != store.message(Source.A, -5).payload
    assert len(store.message(Source.A, 0).payload) == 8


def test_on_window_downloads_everything():
    trace = run_session(MarkovModel(0.2, 0.2), StepAtZero(), horizon=4, L=16, seed=3, t_min=-3)
    assert trace.times == (-3, -2, -1, 0)
    assert all(q is Query.AB for q in trace.queries)
    assert all(n == 32 for n in trace.answer_lengths)
    assert all(trace.decoded_ok)


def test_alternating_chain_keeps_downloading_everything():
    trace = run_session(MarkovModel(1.0, 1.0), StepAtZero(), horizon=8, seed=11)
    assert all(q is Query.AB for q in trace.queries)


def test_decodable_at_every_step():
    for seed in range(25):
        trace = run_session(MarkovModel(0.3, 0.5), StepAtZero(), horizon=9, L=16, seed=seed)
        assert all(trace.decoded_ok)
        for step in trace.steps():
            assert step.query.covers(step.request)
            assert step.answer_length == (32 if step.query is Query.AB else 16)


def test_reproducible_and_seed_sensitive():
    m = MarkovModel(0.2, 0.6)
    mode = Explicit.from_string("NYNNYN")
    a = run_session(m, mode, 6, seed=123)
    b = run_session(m, mode, 6, seed=123)
    c = run_session(m, mode, 6, seed=124)
    assert a == b
    assert a != c


def test_explicit_window_rules():
    mode = Explicit.from_string("YNN")
    assert session_window(mode, 3) == [0, 1, 2]
    with pytest.raises(ValueError):
        session_window(mode, 4)
    with pytest.raises(ValueError):
        session_window(mode, 2, t_min=-1)
    assert session_window(StepAtZero(), 4) == [-1, 0, 1, 2]
    with pytest.raises(ValueError):
        session_window(StepAtZero(), 2, t_min=1)


def test_batch_rows_equal_individual_sessions():
    m = MarkovModel(0.7, 0.6)
    mode = Explicit.from_string("NYNNYN")
    batch = run_sessions(m, mode, 6, runs=6, seed=99)
    for i in range(batch.runs):
        single = run_session(m, mode, 6, seed=split_seed(99, i))
        assert batch.session(i).requests == single.requests
        assert batch.session(i).queries == single.queries
    assert batch.decodable()


def test_trace_exports():
    trace = run_session(MarkovModel(0.2, 0.2), StepAtZero(), 4, seed=5)
    csv_buf = io.StringIO()
    write_traces_csv([trace], csv_buf)
    lines = csv_buf.getvalue().splitlines()
    assert lines[0] == "time,flag,request,query,answer_len"
    assert len(lines) == 5
    first = lines[1].split(",")
    assert first[0] == "-1" and first[1] == "ON" and first[3] == "AB"

    jsonl_buf = io.StringIO()
    write_traces_jsonl([trace], jsonl_buf)
    assert len(jsonl_buf.getvalue().splitlines()) == 4

    again = io.StringIO()
    write_traces_csv([run_session(MarkovModel(0.2, 0.2), StepAtZero(), 4, seed=5)], again)
    assert again.getvalue() == csv_buf.getvalue()


def test_empirical_rate_forced_ab():
    batch = run_sessions(MarkovModel(1.0, 1.0), StepAtZero(), 5, runs=50, seed=0)
    est = empirical_rate(batch, 2)
    assert est.rate == 0.5 and est.stderr == 0.0 and est.p_ab == 1.0


def test_empirical_rate_out_of_range():
    batch = run_sessions(MarkovModel(0.2, 0.2), StepAtZero(), 4, runs=10, seed=1)
    with pytest.raises(OutOfRangeError):
        empirical_rate(batch, 99)
    single = run_sessions(MarkovModel(0.2, 0.2), StepAtZero(), 4, runs=1, seed=1)
    with pytest.raises(OutOfRangeError):
        empirical_rate(single, 1)
    with pytest.raises(OutOfRangeError):
        empirical_rate([], 1)


def test_empirical_rate_from_trace_list():
    m = MarkovModel(0.2, 0.2)
    traces = [run_session(m, StepAtZero(), 4, seed=split_seed(4, i)) for i in range(400)]
    est = empirical_rate(traces, 1)
    batch = run_sessions(m, StepAtZero(), 4, runs=400, seed=4)
    est_batch = empirical_rate(batch, 1)
    assert est == est_batch


def test_paper_rates_within_three_standard_errors():
    # Monte Carlo against the published curve: alpha+beta = 0.4 at t = 1 and
    # t = 4, and alpha+beta = 0.2 at t = 4.
    batch = run_sessions(MarkovModel(0.2, 0.2), StepAtZero(), 7, runs=100_000, seed=20240731)
    for t, expected in [(1, 0.625), (4, 0.885269121813031)]:
        est = empirical_rate(batch, t)
        assert abs(est.rate - expected) <= 3 * est.stderr
    batch = run_sessions(MarkovModel(0.1, 0.1), StepAtZero(), 7, runs=100_000, seed=20240731)
    est = empirical_rate(batch, 4)
    assert abs(est.rate - 0.709421112372304) <= 3 * est.stderr
