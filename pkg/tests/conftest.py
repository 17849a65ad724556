"""Shared test helpers: parameter presets and deterministic token sources."""

from __future__ import annotations

from fractions import Fraction
from typing import List

import pytest

from pmatic import PmaticParams, new_params
from pmatic.rng import SplitMix64


def setting1() -> PmaticParams:
    return new_params(Fraction(1, 1000), Fraction(1, 20))


def setting2() -> PmaticParams:
    return new_params(Fraction(1, 100000), Fraction(1, 200))


@pytest.fixture(scope="session")
def params1() -> PmaticParams:
    return setting1()


@pytest.fixture(scope="session")
def params2() -> PmaticParams:
    return setting2()


def uniform_tokens(n: int, alphabet: int, seed: int) -> List[int]:
    rng = SplitMix64(seed)
    return [rng.next_below(alphabet) for _ in range(n)]


def markov_tokens(n: int, alphabet: int, seed: int, successors: int = 3) -> List[int]:
    """Concentrated Markov source: each (prev, cur) pair transitions into a
    small fixed successor set with skewed weights.  Gives an order-2 n-gram
    predictor something real to learn, so conditionals leave the uniform
    regime quickly."""
    from pmatic.rng import mix64

    rng = SplitMix64(seed)
    out = [rng.next_below(alphabet), rng.next_below(alphabet)]
    # cumulative weights 4:2:1:... over the successor slots
    weights = [2 ** (successors - 1 - i) for i in range(successors)]
    total = sum(weights)
    for _ in range(n - 2):
        gram_hash = mix64((out[-2] * alphabet + out[-1]) ^ (seed * 0x9E37))
        u = rng.next_below(total)
        slot = 0
        acc = 0
        for i, w in enumerate(weights):
            acc += w
            if u < acc:
                slot = i
                break
        out.append(mix64(gram_hash + slot * 0xA5A5A5A5) % alphabet)
    return out[:n]
