"""Logit/probability vectors, mismatch injection, and verification oracles.

The mismatch model: encoder and decoder each run a predictor that maps a
context to one logit per symbol; the decoder's logits may differ from the
encoder's by at most eps per coordinate.  The quantity that decides whether
the codec survives is the *conditional* total-variation distance between the
induced softmax distributions — the worst TV distance after restricting both
to any nonempty symbol subset — which is at most tanh(eps/2) <= eps/2.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import AlphabetTooLarge, DomainError
from .rng import SplitMix64

__all__ = [
    "softmax",
    "inject_uniform_noise",
    "inject_adversarial_bit_offset",
    "cond_tv_bruteforce",
    "cond_tv_bound",
]

_ADVERSARIAL_TINY = 1e-12


def softmax(logits: Sequence[float]) -> np.ndarray:
    """Strictly positive probability vector exp(u_k) / sum_j exp(u_j).

    Shifted by max(u) before exponentiation, so any finite logits are safe;
    adding a constant to every logit leaves the output unchanged (up to float
    rounding).
    """
    arr = np.asarray(logits, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError("softmax expects a nonempty 1-D logit vector")
    if not np.all(np.isfinite(arr)):
        raise DomainError("softmax expects finite logits")
    shifted = arr - arr.max()
    exps = np.exp(shifted)
    return exps / exps.sum()


def inject_uniform_noise(logits: Sequence[float], eps: float, seed: int) -> np.ndarray:
    """Add IID Uniform[-eps, eps] noise per logit from a SplitMix64(seed) stream.

    The sup-norm bound ||out - in||_inf <= eps holds exactly: each draw is
    -eps + 2*eps*u with u in [0, 1), and IEEE rounding of that expression
    cannot escape [-eps, eps].
    """
    if eps < 0:
        raise DomainError(f"eps must be >= 0, got {eps}")
    arr = np.asarray(logits, dtype=np.float64)
    if eps == 0:
        return arr.copy()
    noise = SplitMix64(seed).uniform_vector(arr.size, -eps, eps)
    return arr + noise


def inject_adversarial_bit_offset(p: float, delta, direction: int) -> float:
    """Worst-case per-bit mismatch hook: p shifted by +-delta, clamped to
    [1e-12, 1 - 1e-12].

    The advertised contract |out - p| <= delta is *exact* (rational
    comparison).  Naive float addition can overshoot by half an ulp when the
    rounded sum lands beyond the true p + delta, so after clamping, the result
    is stepped back toward p ulp by ulp until the exact bound holds (at most a
    couple of steps, usually zero).
    """
    if direction not in (-1, 1):
        raise DomainError(f"direction must be +1 or -1, got {direction}")
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must be in (0,1), got {p}")
    d_exact = Fraction(delta)
    if d_exact < 0:
        raise DomainError(f"delta must be >= 0, got {delta}")
    q = p + direction * float(d_exact)
    q = min(max(q, _ADVERSARIAL_TINY), 1.0 - _ADVERSARIAL_TINY)
    p_exact = Fraction(p)
    while abs(Fraction(q) - p_exact) > d_exact:
        q = math.nextafter(q, p)
    return q


def cond_tv_bruteforce(p: Sequence[float], q: Sequence[float]) -> float:
    """Conditional TV distance by exhaustive enumeration of conditioning sets.

    For each nonempty S (bitmask enumeration, capped at |A| = 20), the inner
    maximum over answer sets S* <= S of |p(S*|S) - q(S*|S)| is computed by a
    linear scan: the maximizing S* collects exactly the symbols whose
    conditioned p exceeds their conditioned q (the endpoint of the sorted
    likelihood-ratio scan), so the inner max equals the TV distance of the
    conditioned vectors, sum of positive parts of (p|S - q|S).  Tests verify
    this against literal 2^|S| enumeration for small alphabets.
    """
    pv = np.asarray(p, dtype=np.float64)
    qv = np.asarray(q, dtype=np.float64)
    if pv.shape != qv.shape or pv.ndim != 1:
        raise DomainError("cond_tv_bruteforce expects two equal-length vectors")
    n = pv.size
    if n > 20:
        raise AlphabetTooLarge(f"brute force capped at 20 symbols, got {n}")
    if np.any(pv <= 0) or np.any(qv <= 0):
        raise DomainError("probability vectors must be strictly positive")
    best = 0.0
    for mask in range(1, 1 << n):
        idx = [i for i in range(n) if mask >> i & 1]
        ps = pv[idx]
        qs = qv[idx]
        ps = ps / ps.sum()
        qs = qs / qs.sum()
        diff = ps - qs
        tv = float(diff[diff > 0].sum())
        if tv > best:
            best = tv
    return best


def cond_tv_bound(eps: float) -> float:
    """Upper bound on conditional TV under a logit sup-norm bound eps:
    tanh(eps/2), itself at most eps/2."""
    if eps < 0:
        raise DomainError(f"eps must be >= 0, got {eps}")
    return math.tanh(eps / 2.0)
