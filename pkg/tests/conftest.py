import math
from typing import List

import numpy as np
import pytest

from src.core.exponents import CknParams, derive_exponents, validate_ckn
from src.core.radial import RadialFunction, build_grid
from src.core.solver import SolverOptions

REFERENCE = dict(N=3, p=2.0, q=2.0, r=3.0, mu=0.0, sigma=0.0, s=1.0)


def sample_valid_tuples(count: int, seed: int) -> List[CknParams]:
    """
    Random tuples passing validate_ckn, kept away from the q -> p*(sigma,mu) and
    r1 -> q corners where the split identities lose digits to cancellation.
    """
    rng = np.random.default_rng(seed)
    tuples: List[CknParams] = []
    attempts = 0
    while len(tuples) < count:
        attempts += 1
        assert attempts < 200 * count, "tuple sampler acceptance rate collapsed"

        N = int(rng.integers(2, 7))
        p = rng.uniform(1.05, N - 0.1)
        mu = rng.uniform(-0.5, N - p - 0.05)
        top = mu + p
        if top < 0.1:
            continue
        s = rng.uniform(0.02, top - 0.01)
        sigma = rng.uniform(-0.5, top - 0.01)

        p_star = p * N / (N - p)
        q_high = min(p_star, p * (N - sigma) / (N - p - mu))
        if q_high <= 1.02:
            continue
        q = rng.uniform(1.0, q_high - 0.01)

        lower = max(p * (sigma - s) / (N - mu - p) + q, (sigma - s) * q / (N - sigma) + q, 1.0)
        upper = min(p_star, p * (N - s) / (N - p - mu))
        if upper - lower <= 0.05:
            continue
        r = rng.uniform(lower + 0.01, upper - 0.01)

        # (N - sigma)p - (N - mu - p)q divides every split exponent
        if (N - sigma) * p - (N - mu - p) * q < 0.05 * (N - sigma) * p:
            continue
        params = CknParams(N=N, p=p, q=q, r=r, mu=mu, sigma=sigma, s=s)
        if not validate_ckn(params).valid:
            continue
        if q - derive_exponents(params).r1 < 0.05 * q:
            continue
        tuples.append(params)
    return tuples


@pytest.fixture
def reference_params() -> CknParams:
    return CknParams(**REFERENCE)


@pytest.fixture(scope="session")
def valid_tuples() -> List[CknParams]:
    return sample_valid_tuples(10_000, seed=20240917)


@pytest.fixture
def small_grid():
    """Short grid where finite differences stay clear of roundoff."""
    return build_grid(-3.0, 3.0, 301, 3)


@pytest.fixture
def reference_grid():
    return build_grid(-12.0, 12.0, 2401, 3)


@pytest.fixture
def coarse_grid():
    return build_grid(-12.0, 12.0, 601, 3)


@pytest.fixture
def bump(reference_grid) -> RadialFunction:
    return RadialFunction.from_callable(reference_grid, lambda tau: np.exp(-tau ** 2))


@pytest.fixture
def default_options() -> SolverOptions:
    return SolverOptions()


@pytest.fixture
def sphere_3d() -> float:
    return 4.0 * math.pi
