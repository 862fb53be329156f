from fractions import Fraction
from functools import lru_cache
from typing import Tuple

from pd_dual.common.logging_utils import get_logger
from pd_dual.common.numeric import Number
from pd_dual.common.objects import EMPTY, UNIT, Params, Partition
from pd_dual.dual_process.objects import CoefficientMap
from pd_dual.partitions.combinatorics import down_step_distribution
from pd_dual.sampling.ewens_pitman import mean_augmented_monomial

logger = get_logger(__name__)

__all__ = [
    "generator_coefficients",
    "generator_coefficients_recursive",
    "generator_route_discrepancy",
    "check_generator_routes",
    "dual_generator_coefficients",
    "lifted_generator_coefficients",
    "duality_discrepancy",
    "check_duality_identity",
]


def _values(params: Params) -> Tuple[Number, Number]:
    if params.exact:
        return Fraction(params.alpha), Fraction(params.theta)
    return float(params.alpha), float(params.theta)


def _half(params: Params) -> Number:
    return Fraction(1, 2) if params.exact else 0.5


def generator_coefficients(eta: Partition, params: Params) -> CoefficientMap:
    """
    Coefficients of L P̃_η in the P̃ basis, in closed form:
    -n(n+θ-1)/2 on η, η_i(η_i-1-α)/2 on η - e_i for every part η_i > 1 and
    (θ + (d-1)α)/2 on η - e_i for every singleton η_i = 1. Deleting the last
    part of (1) gives the constant, keyed by (1).

    Args:
        eta (`Partition`):
            A partition with |η| >= 1.
        params (`Params`):
            The (α, θ) pair.

    Returns:
        `CoefficientMap`: the combination, zero coefficients kept.
    """
    eta = Partition(eta)
    if eta.n < 1:
        raise ValueError("The generator acts on non-empty partitions")
    alpha, theta = _values(params)
    half = _half(params)
    n, d = eta.n, eta.d
    result = CoefficientMap()
    result.add(eta, -half * n * (n + theta - 1))
    for part, count in eta.multiplicities.items():
        smaller = eta.remove_one(part)
        if smaller == EMPTY:
            smaller = UNIT
        if part > 1:
            result.add(smaller, half * count * part * (part - 1 - alpha))
        else:
            result.add(smaller, half * count * (theta + (d - 1) * alpha))
    return result


def _direct_action(eta: Partition, alpha: Number, theta: Number, half: Number) -> CoefficientMap:
    # the differential operator applied to a singleton-free monomial
    n = eta.n
    result = CoefficientMap()
    result.add(eta, -half * n * (n + theta - 1))
    for part, count in eta.multiplicities.items():
        result.add(eta.remove_one(part), half * count * part * (part - 1 - alpha))
    return result


def generator_coefficients_recursive(eta: Partition, params: Params) -> CoefficientMap:
    """
    L P̃_η obtained without the closed form: singleton-free η get the direct
    action of the differential operator, and a singleton is removed with
    P̃_η = P̃_{η-e_i} - Σ_{j≠i} P̃_{η-e_i+e_j} before applying L linearly.

    Args:
        eta (`Partition`):
            A partition with |η| >= 1.
        params (`Params`):
            The (α, θ) pair.

    Returns:
        `CoefficientMap`: the combination in the P̃ basis.
    """
    eta = Partition(eta)
    if eta.n < 1:
        raise ValueError("The generator acts on non-empty partitions")
    return CoefficientMap(dict(_recursive(eta, params)))


@lru_cache(maxsize=4096)
def _recursive(eta: Partition, params: Params) -> Tuple[Tuple[Partition, Number], ...]:
    alpha, theta = _values(params)
    if eta == UNIT:
        # L annihilates constants
        return ()
    if eta.singletons == 0:
        return tuple(_direct_action(eta, alpha, theta, _half(params)).items())
    reduced = eta.remove_one(1)
    result = CoefficientMap(dict(_recursive(reduced, params)))
    for part, count in reduced.multiplicities.items():
        for key, value in _recursive(reduced.add_one(part), params):
            result.add(key, -count * value)
    return tuple(result.items())


def generator_route_discrepancy(eta: Partition, params: Params) -> CoefficientMap:
    """
    Closed form minus recursive route, both rewritten over the singleton-free
    basis; empty when the two agree.
    """
    closed = generator_coefficients(eta, params).reduced()
    recursive = generator_coefficients_recursive(eta, params).reduced()
    return closed.combined(recursive, sign=-1).pruned()


def check_generator_routes(eta: Partition, params: Params, tolerance: float = 0) -> bool:
    """
    True iff both routes give the same function; exact for rational parameters.
    """
    discrepancy = generator_route_discrepancy(eta, params).pruned(tolerance)
    if discrepancy:
        logger.warning("generator routes disagree on %s: %s", eta, discrepancy)
    return not discrepancy


def dual_generator_coefficients(eta: Partition, params: Params) -> CoefficientMap:
    """
    Coefficients of A_θ g_η in the g basis: -λ_n on η and λ_n p↓(η, ω) on every
    ω covered by η, with λ_n = n(n+θ-1)/2.

    Args:
        eta (`Partition`):
            A partition with |η| >= 2.
        params (`Params`):
            The (α, θ) pair; only θ enters.

    Returns:
        `CoefficientMap`: the combination, summing to 0.
    """
    eta = Partition(eta)
    if eta.n < 2:
        raise ValueError(f"The dual generator needs |η| >= 2, got {eta}")
    _, theta = _values(params)
    rate = _half(params) * eta.n * (eta.n + theta - 1)
    result = CoefficientMap()
    result.add(eta, -rate)
    for omega, prob in down_step_distribution(eta).items():
        result.add(omega, rate * (prob if params.exact else float(prob)))
    return result


def lifted_generator_coefficients(eta: Partition, params: Params) -> CoefficientMap:
    """
    L g_η in the g basis, g_ω = P̃_ω / E[P̃_ω]: the closed-form coefficients
    c_ω rescaled to c_ω E[P̃_ω] / E[P̃_η].
    """
    eta = Partition(eta)
    norm = mean_augmented_monomial(eta, params)
    return CoefficientMap(
        {
            omega: value * mean_augmented_monomial(omega, params) / norm
            for omega, value in generator_coefficients(eta, params).items()
        }
    )


def duality_discrepancy(eta: Partition, params: Params) -> CoefficientMap:
    """
    L g_η - A_θ g_η coefficient by coefficient.
    """
    lifted = lifted_generator_coefficients(eta, params)
    return lifted.combined(dual_generator_coefficients(eta, params), sign=-1).pruned()


def check_duality_identity(eta: Partition, params: Params, tolerance: float = 0) -> bool:
    """
    Whether L g_η = A_θ g_η holds as an identity of coefficient maps.

    Args:
        eta (`Partition`):
            A partition with |η| >= 2.
        params (`Params`):
            The (α, θ) pair; rational values give an exact verdict.
        tolerance (`float`, optional, default: `0`):
            Slack for float parameters.

    Returns:
        `bool`: True when every coefficient agrees.
    """
    discrepancy = duality_discrepancy(eta, params).pruned(tolerance)
    if discrepancy:
        logger.warning("duality fails on %s: %s", eta, discrepancy)
    return not discrepancy
