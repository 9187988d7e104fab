"""Pure-Python backend for the hot kernels.

This is the readable, always-available implementation; onoff_privacy._kernels
is the compiled twin. The two must stay step-for-step identical (same branch
structure, same floating-point operation order, same atom/group ordering) so
that results agree bit-for-bit; tests enforce this whenever the compiled
module is importable.

Kernel surface:
  enumerate_atoms  exact joint law of (request path, query path)
  cond_mi_bits     conditional mutual information from grouped atoms
  simulate_batch   many seeded sessions, requests/queries only
  rng_probe        raw PCG32 words, for cross-backend RNG checks
"""

from __future__ import annotations

from math import log2

import numpy as np

from .rng import Rng, _stream

NAME = "pure"


def enumerate_atoms(
    alpha: float,
    beta: float,
    p_a: float,
    flags: np.ndarray,
    tables: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Forward-enumerate every positive-probability (request, query) history.

    flags[t] is 1 when privacy is ON at window step t; tables[tau, ref, x, q]
    is the policy row used tau steps after the latest ON time. Paths are
    encoded as integers: request bit t (A=0, B=1), query base-3 digit t
    (A=0, B=1, AB=2). Zero-probability branches are pruned at generation.
    """
    T = int(len(flags))
    # state: (x_code, q_code, prob, last_x, ref, prev_q, offset, ever_on)
    states = [(0, 0, 1.0, -1, -1, -1, 0, 0)]
    for t in range(T):
        bit = 1 << t
        pow3 = 3**t
        flag = int(flags[t])
        new = []
        for x_code, q_code, prob, last_x, ref, prev_q, offset, ever in states:
            for x in (0, 1):
                if last_x < 0:
                    px = p_a if x == 0 else 1.0 - p_a
                elif last_x == 0:
                    px = 1.0 - alpha if x == 0 else alpha
                else:
                    px = beta if x == 0 else 1.0 - beta
                if px == 0.0:
                    continue
                base = prob * px
                x2 = x_code | (bit if x else 0)
                if flag:
                    new.append((x2, q_code + 2 * pow3, base, x, x, 2, 0, 1))
                elif not ever or prev_q != 2:
                    new.append((x2, q_code + x * pow3, base, x, ref, x, offset + 1, ever))
                else:
                    row = tables[offset + 1, ref, x]
                    for q in (0, 1, 2):
                        pq = float(row[q])
                        if pq == 0.0:
                            continue
                        new.append(
                            (x2, q_code + q * pow3, base * pq, x, ref, q, offset + 1, 1)
                        )
        states = new
    n = len(states)
    x_codes = np.empty(n, dtype=np.int64)
    q_codes = np.empty(n, dtype=np.int64)
    probs = np.empty(n, dtype=np.float64)
    for i, st in enumerate(states):
        x_codes[i] = st[0]
        q_codes[i] = st[1]
        probs[i] = st[2]
    return x_codes, q_codes, probs


def cond_mi_bits(
    probs: np.ndarray,
    c_keys: np.ndarray,
    v_keys: np.ndarray,
    g_keys: np.ndarray,
) -> float:
    """I(V; G | C) in bits from atoms carrying integer keys for each variable.

    Uses 0 log 0 = 0 and skips conditioning events with mass below 1e-15
    (they contribute nothing exactly and only float noise otherwise).
    Groups are summed in first-seen atom order.
    """
    p_c: dict[int, float] = {}
    p_cv: dict[tuple[int, int], float] = {}
    p_cg: dict[tuple[int, int], float] = {}
    p_cvg: dict[tuple[int, int, int], float] = {}
    for i in range(len(probs)):
        c = int(c_keys[i])
        v = int(v_keys[i])
        g = int(g_keys[i])
        p = float(probs[i])
        p_c[c] = p_c.get(c, 0.0) + p
        p_cv[(c, v)] = p_cv.get((c, v), 0.0) + p
        p_cg[(c, g)] = p_cg.get((c, g), 0.0) + p
        p_cvg[(c, v, g)] = p_cvg.get((c, v, g), 0.0) + p
    mi = 0.0
    for (c, v, g), p in p_cvg.items():
        pc = p_c[c]
        if pc < 1e-15 or p == 0.0:
            continue
        mi += p * log2((p * pc) / (p_cv[(c, v)] * p_cg[(c, g)]))
    return mi


def simulate_batch(
    alpha: float,
    beta: float,
    p_a: float,
    flags: np.ndarray,
    tables: np.ndarray,
    runs: int,
    master_key: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate ``runs`` sessions; row i uses the key split_seed(master, i).

    Per step: one uniform draw for the request, then one more only when the
    policy actually randomizes (OFF, after an ON, previous query AB).
    """
    T = int(len(flags))
    requests = np.empty((runs, T), dtype=np.int8)
    queries = np.empty((runs, T), dtype=np.int8)
    for i in range(runs):
        session_key = _stream(master_key, 2 + i)
        rng = Rng(_stream(session_key, 2 + 0))
        last = -1
        ref = -1
        prev_q = -1
        offset = 0
        ever = False
        for t in range(T):
            if last < 0:
                px_a = p_a
            elif last == 0:
                px_a = 1.0 - alpha
            else:
                px_a = beta
            x = 0 if rng.random() < px_a else 1
            if flags[t]:
                q = 2
                ref, prev_q, offset, ever = x, 2, 0, True
            elif not ever or prev_q != 2:
                q = x
                prev_q, offset = x, offset + 1
            else:
                row = tables[offset + 1, ref, x]
                u = rng.random()
                acc = 0.0
                q = 2
                for j in (0, 1, 2):
                    acc += row[j]
                    if u < acc:
                        q = j
                        break
                prev_q, offset = q, offset + 1
            requests[i, t] = x
            queries[i, t] = q
            last = x
    return requests, queries


def rng_probe(key: int, n: int) -> np.ndarray:
    """First n 32-bit outputs of the stream for ``key`` (testing hook)."""
    rng = Rng(key)
    return np.array([rng.next_u32() for _ in range(n)], dtype=np.uint32)
