import math

import numpy as np
import pytest

from relbounds import ChannelKernel, OptimizerConfig, ProbVec, ml_metric

LOG2 = math.log(2.0)


@pytest.fixture(scope="session")
def bsc01():
    return ChannelKernel.bsc(0.1)


@pytest.fixture(scope="session")
def ml01(bsc01):
    return ml_metric(bsc01)


@pytest.fixture(scope="session")
def uniform2():
    return ProbVec(np.array([0.5, 0.5]))


@pytest.fixture(scope="session")
def fast_cfg():
    # small restart budget keeps the suite quick; seeds stay fixed
    return OptimizerConfig(restarts=4, rng_seed=20240501)


def h2_nats(x: float) -> float:
    if x in (0.0, 1.0):
        return 0.0
    return -x * math.log(x) - (1 - x) * math.log(1 - x)


def kl2(a: float, b: float) -> float:
    v = 0.0
    if a > 0:
        v += a * math.log(a / b)
    if a < 1:
        v += (1 - a) * math.log((1 - a) / (1 - b))
    return v


def bsc_esp_oracle(R_nats: float, p: float) -> float:
    """Independent delta-parametrized sphere-packing oracle (bisection)."""
    if R_nats >= LOG2 - h2_nats(p):
        return 0.0
    lo, hi = p, 0.5
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if LOG2 - h2_nats(mid) > R_nats:
            lo = mid
        else:
            hi = mid
    return kl2(0.5 * (lo + hi), p)


def zero_rate_scan_oracle(p: float, n: int = 100_000) -> float:
    """Zero-rate exponent for the BSC by brute scan over the tilt."""
    a = math.log((1 - p) / p)
    best = 0.0
    for s in np.linspace(0.0, 4.0, n):
        val = -0.5 * math.log((1 - p) * math.exp(-s * a) + p * math.exp(s * a))
        if val > best:
            best = val
    return best
