from fractions import Fraction
from typing import Dict, Tuple

from pd_dual.common.config import DEFAULT_SETTINGS, Settings
from pd_dual.common.logging_utils import get_logger
from pd_dual.common.numeric import Number, multinomial, rising
from pd_dual.common.objects import Params, Partition
from pd_dual.partitions.combinatorics import (
    covered_by,
    covers,
    down_step_distribution,
    enumerate_partitions,
)
from pd_dual.sampling.objects import ConsistencyReport

logger = get_logger(__name__)

__all__ = [
    "sampling_prefactor",
    "mean_augmented_monomial",
    "ewens_pitman",
    "ewens_pitman_table",
    "check_consistency",
    "up_step_distribution",
    "updown_kernel",
]


def _coerce(params: Params) -> Tuple[Number, Number]:
    # exact parameters are promoted to Fraction so that int / int never yields a float
    if params.exact:
        return Fraction(params.alpha), Fraction(params.theta)
    return float(params.alpha), float(params.theta)


def sampling_prefactor(eta: Partition, exact: bool = True) -> Number:
    """
    binom(n; η) / (a_1(η)! ... a_n(η)!), the factor turning P̃_η into P⃗_η.
    """
    eta = Partition(eta)
    value = Fraction(multinomial(eta), eta.multiplicity_factorial)
    return value if exact else float(value)


def mean_augmented_monomial(eta: Partition, params: Params) -> Number:
    """
    E_{α,θ}[P̃_η] = Π_{l<d}(θ + lα) Π_i (1-α)_(η_i - 1) / (θ)_(n).

    The common factor θ is cancelled before dividing, so θ = 0 (allowed when
    α > 0) is handled.

    Args:
        eta (`Partition`):
            A non-empty partition.
        params (`Params`):
            The (α, θ) pair.

    Returns:
        `Number`: the moment, a `Fraction` for exact parameters.
    """
    eta = Partition(eta)
    alpha, theta = _coerce(params)
    numerator = Fraction(1) if params.exact else 1.0
    if eta.n == 0:
        return numerator
    for l in range(1, eta.d):
        numerator *= theta + l * alpha
    for part in eta:
        numerator *= rising(1 - alpha, part - 1)
    return numerator / rising(theta + 1, eta.n - 1)


def ewens_pitman(eta: Partition, params: Params) -> Number:
    """
    The Ewens-Pitman sampling probability M_n(η).

    Args:
        eta (`Partition`):
            A partition with |η| >= 1.
        params (`Params`):
            The (α, θ) pair.

    Returns:
        `Number`: M_n(η), exact when the parameters are.
    """
    eta = Partition(eta)
    if eta.n < 1:
        raise ValueError("The Ewens-Pitman formula needs at least one observation")
    return sampling_prefactor(eta, params.exact) * mean_augmented_monomial(eta, params)


def ewens_pitman_table(
    n: int, params: Params, settings: Settings = DEFAULT_SETTINGS
) -> Dict[Partition, Number]:
    """
    M_n over the whole of Γ_n, in canonical order.
    """
    return {eta: ewens_pitman(eta, params) for eta in enumerate_partitions(n, settings)}


def check_consistency(
    n: int, params: Params, settings: Settings = DEFAULT_SETTINGS
) -> ConsistencyReport:
    """
    Verify M_{n-1}(ω) = Σ_{η ⊃ ω} [binom(n-1; ω) χ(ω, η) / binom(n; η)] M_n(η)
    for every ω ∈ Γ_{n-1}.

    Args:
        n (`int`):
            Size of the larger layer, 2 <= n <= cap.
        params (`Params`):
            The (α, θ) pair; exact parameters give an exact verdict.
        settings (`Settings`, optional):
            Supplies the enumeration cap.

    Returns:
        `ConsistencyReport`: the discrepancy of every ω and their maximum.
    """
    if n < 2:
        raise ValueError(f"Consistency relates Γ_(n-1) and Γ_n, needs n >= 2, got {n}")
    upper = ewens_pitman_table(n, params, settings)
    pushed: Dict[Partition, Number] = {}
    for eta, mass in upper.items():
        # binom(n-1; ω) χ(ω, η) / binom(n; η) is exactly p↓(η, ω)
        for omega, prob in down_step_distribution(eta).items():
            pushed[omega] = pushed.get(omega, 0) + prob * mass
    discrepancies = []
    for omega in enumerate_partitions(n - 1, settings):
        discrepancies.append((omega, abs(ewens_pitman(omega, params) - pushed.get(omega, 0))))
    worst = max(d for _, d in discrepancies)
    logger.debug("consistency n=%d params=%s max discrepancy %s", n, params, worst)
    return ConsistencyReport(n=n, params=params, max_discrepancy=worst, discrepancies=discrepancies)


def up_step_distribution(eta: Partition, params: Params) -> Dict[Partition, Number]:
    """
    One step of the up chain: p↑(η, λ) = [M_{n+1}(λ) / M_n(η)] p↓(λ, η).

    Args:
        eta (`Partition`):
            Current configuration, |η| >= 1.
        params (`Params`):
            The (α, θ) pair.

    Returns:
        `Dict[Partition, Number]`: the law of the next configuration.
    """
    eta = Partition(eta)
    base = ewens_pitman(eta, params)
    if base == 0:
        raise ValueError(f"M_n({eta}) vanishes, the up chain is undefined there")
    law = {}
    for larger in covers(eta):
        down = down_step_distribution(larger)[eta]
        law[larger] = ewens_pitman(larger, params) / base * down
    return law


def updown_kernel(eta: Partition, target: Partition, params: Params) -> Number:
    """
    T(η, η̃) = Σ_λ p↑(η, λ) p↓(λ, η̃) over λ covering both.

    Args:
        eta (`Partition`):
            Starting configuration.
        target (`Partition`):
            Configuration after one insertion and one deletion.
        params (`Params`):
            The (α, θ) pair.

    Returns:
        `Number`: the transition probability.
    """
    eta, target = Partition(eta), Partition(target)
    if eta.n != target.n:
        raise ValueError(f"The up-down chain preserves size: {eta} and {target} differ")
    total = 0
    for larger, up in up_step_distribution(eta, params).items():
        total += up * covered_by_prob(larger, target)
    return total


def covered_by_prob(larger: Partition, smaller: Partition) -> Fraction:
    # p↓(λ, ω) is zero unless λ covers ω
    if smaller not in covered_by(larger):
        return Fraction(0)
    return down_step_distribution(larger)[smaller]
