"""Goedel t-conorm and the boost functions that raise a clause's truth value.

A boost function adds nonnegative deltas to literal truth values so the
disjunction's t-conorm cannot decrease. The hard variant concentrates the
whole increment on the strongest literal, which is the smallest change (in
any l_p norm) achieving that increase under the Goedel t-conorm. The soft
variant replaces the argmax with a softmax over preactivations so it can sit
inside a differentiable model.
"""

from __future__ import annotations

import math

import numpy as np


def _check_truth(t) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64).reshape(-1)
    if t.size == 0:
        raise ValueError("truth vector must be nonempty")
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise ValueError("truth values must lie in [0, 1]")
    return t


def godel(t) -> float:
    """Goedel t-conorm: the maximum of the literal truth values."""
    return float(np.max(_check_truth(t)))


def boost_hard(f_val: float, t) -> np.ndarray:
    """Add f_val to the strongest literal only (ties break to the lowest index).

    Requires 0 <= f_val <= 1 - max(t) so the boosted vector stays in [0, 1].
    """
    t = _check_truth(t)
    headroom = 1.0 - float(np.max(t))
    if f_val < 0.0 or f_val > headroom + 1e-15:
        raise ValueError(f"f_val must be in [0, {headroom}], got {f_val}")
    delta = np.zeros_like(t)
    delta[int(np.argmax(t))] = f_val
    return delta


def softmax(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    e = np.exp(v - v.max())
    return e / e.sum()


def boost_soft(w: float, v) -> np.ndarray:
    """w * softmax(v) on literal preactivations: strictly positive deltas
    summing to w, concentrating on the strongest literal as gaps grow."""
    if w < 0.0:
        raise ValueError(f"clause weight must be nonnegative, got {w}")
    return w * softmax(v)


def boost_uniform(f_val: float, t) -> np.ndarray:
    """Control boost for the minimality demo: spreads f_val evenly over all
    literals (clipped into the valid box). Deliberately not minimal."""
    t = _check_truth(t)
    return np.minimum(np.full_like(t, f_val / t.size), 1.0 - t)


def _sample_lp_sphere(rng: np.random.Generator, n: int, p: float, radius: float, count: int) -> np.ndarray:
    """Points uniformly distributed on the l_p sphere of the given radius.

    Components are drawn from the generalized normal density exp(-|x|^p) via
    the Gamma(1/p) transform, then normalized.
    """
    mag = rng.gamma(1.0 / p, 1.0, size=(count, n)) ** (1.0 / p)
    signs = rng.choice([-1.0, 1.0], size=(count, n))
    x = mag * signs
    norms = np.sum(np.abs(x) ** p, axis=1) ** (1.0 / p)
    norms[norms == 0.0] = 1.0
    return x * (radius / norms)[:, None]


def minimality_witness_search(
    t,
    delta,
    p: float = 2.0,
    trials: int = 100_000,
    rng_seed: int = 0,
) -> np.ndarray | None:
    """Randomized search for a counterexample to minimality of `delta`.

    Samples candidate boosts with strictly smaller l_p norm than `delta`
    (drawn near the norm boundary, then clipped into the valid box) and
    returns the first candidate whose boosted t-conorm matches or exceeds the
    one `delta` achieves, or None when `trials` samples all fail.
    """
    if p < 1.0:
        raise ValueError(f"norm order must be >= 1, got {p}")
    t = _check_truth(t)
    delta = np.asarray(delta, dtype=np.float64).reshape(-1)
    if delta.shape != t.shape:
        raise ValueError("delta must align with t")
    if np.any(delta < -1e-12) or np.any(t + delta > 1.0 + 1e-12):
        raise ValueError("delta is not a valid boost for t")

    norm = float(np.sum(np.abs(delta) ** p) ** (1.0 / p))
    if norm == 0.0:
        return None  # nothing has a strictly smaller norm
    target = godel(np.clip(t + delta, 0.0, 1.0))
    box_hi = 1.0 - t

    rng = np.random.default_rng(rng_seed)
    chunk = 20_000
    remaining = trials
    while remaining > 0:
        k = min(chunk, remaining)
        remaining -= k
        cand = _sample_lp_sphere(rng, t.size, p, (1.0 - 1e-6) * norm, k)
        cand = np.clip(cand, 0.0, box_hi[None, :])
        # clipping only shrinks the norm, so every candidate stays strictly
        # below the norm of delta and inside the valid box
        boosted = np.max(t[None, :] + cand, axis=1)
        hits = np.nonzero(boosted >= target)[0]
        if hits.size:
            return cand[hits[0]]
    return None


def collision_probability_exact(n: int, m: int) -> float:
    """Closed form of the collision probability for clauses with n and m
    literals sharing one opposite-sign atom: the Beta integral
    B(n, m) = (n-1)! (m-1)! / (n+m-1)!."""
    if n < 2 or m < 2:
        raise ValueError("clauses need at least 2 literals")
    return math.factorial(n - 1) * math.factorial(m - 1) / math.factorial(n + m - 1)


def collision_mc(n: int, m: int, samples: int = 1_000_000, rng_seed: int = 0) -> float:
    """Monte Carlo estimate of the collision probability under a random
    classifier.

    The shared atom's truth value x is uniform; a collision happens when x is
    the strongest literal of the first clause while 1-x is the strongest of
    the second, so the hard boosts push the shared atom in opposite
    directions.
    """
    if n < 2 or m < 2:
        raise ValueError("clauses need at least 2 literals")
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = np.random.default_rng(rng_seed)
    hits = 0
    chunk = 200_000
    remaining = samples
    while remaining > 0:
        k = min(chunk, remaining)
        remaining -= k
        x = rng.uniform(size=k)
        others1 = rng.uniform(size=(k, n - 1))
        others2 = rng.uniform(size=(k, m - 1))
        win1 = x > others1.max(axis=1)
        win2 = (1.0 - x) > others2.max(axis=1)
        hits += int(np.count_nonzero(win1 & win2))
    return hits / samples
