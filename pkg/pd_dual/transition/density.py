import math
from fractions import Fraction
from math import comb, factorial
from typing import List

from pd_dual.common.config import DEFAULT_SETTINGS, Settings
from pd_dual.common.errors import EnumerationLimitError
from pd_dual.common.logging_utils import get_logger
from pd_dual.common.numeric import Number, is_exact, rising
from pd_dual.common.objects import Params
from pd_dual.dual_process.death_process import (
    absorb_prob,
    death_prob_infinite,
    infinite_death_distribution,
)
from pd_dual.partitions.combinatorics import enumerate_partitions
from pd_dual.sampling.ewens_pitman import ewens_pitman
from pd_dual.sampling.symmetric import FrequenciesLike, as_frequencies, eval_sampling_prob
from pd_dual.transition.objects import DensityEval

logger = get_logger(__name__)

__all__ = [
    "kernel_p_n",
    "kernel_p_sequence",
    "kernel_q_m",
    "spectral_factor",
    "density_mixture",
    "density_spectral",
]


def _check_order(order: int, settings: Settings) -> None:
    if order > settings.kernel_cap:
        raise EnumerationLimitError(
            f"Kernel order {order} exceeds the cap {settings.kernel_cap}"
        )


def kernel_p_n(
    x: FrequenciesLike,
    y: FrequenciesLike,
    n: int,
    params: Params,
    settings: Settings = DEFAULT_SETTINGS,
) -> Number:
    """
    p_n(x, y) = Σ_{|η|=n} P⃗_η(x) P⃗_η(y) / E[P⃗_η], with p_0 = 1.

    Args:
        x (`Frequencies`):
            First point.
        y (`Frequencies`):
            Second point.
        n (`int`):
            Order, 0 <= n <= kernel_cap.
        params (`Params`):
            The (α, θ) pair.
        settings (`Settings`, optional):
            Supplies the caps.

    Returns:
        `Number`: the kernel, exact when x, y and the parameters are.
    """
    if n < 0:
        raise ValueError(f"Kernel order must be non-negative, got {n}")
    _check_order(n, settings)
    x, y = as_frequencies(x), as_frequencies(y)
    exact = x.exact and y.exact and params.exact
    if n == 0:
        return Fraction(1) if exact else 1.0
    if not exact:
        params = params.as_float()
    total = Fraction(0) if exact else 0.0
    for eta in enumerate_partitions(n, settings):
        left = eval_sampling_prob(eta, x, method="direct")
        if left == 0:
            continue
        right = eval_sampling_prob(eta, y, method="direct")
        total += left * right / ewens_pitman(eta, params)
    return total


def kernel_p_sequence(
    x: FrequenciesLike,
    y: FrequenciesLike,
    n_max: int,
    params: Params,
    settings: Settings = DEFAULT_SETTINGS,
) -> List[Number]:
    """
    [p_0(x, y), ..., p_{n_max}(x, y)].
    """
    x, y = as_frequencies(x), as_frequencies(y)
    return [kernel_p_n(x, y, n, params, settings) for n in range(n_max + 1)]


def _q_from_sequence(sequence: List[Number], m: int, theta: Number) -> Number:
    total = 0
    for n in range(m + 1):
        total += (-1) ** (m - n) * comb(m, n) * rising(n + theta, m - 1) * sequence[n]
    return (2 * m - 1 + theta) * total / factorial(m)


def kernel_q_m(
    x: FrequenciesLike,
    y: FrequenciesLike,
    m: int,
    params: Params,
    settings: Settings = DEFAULT_SETTINGS,
) -> Number:
    """
    q_m(x, y) = [(2m - 1 + θ) / m!] Σ_{n=0}^{m} (-1)^{m-n} binom(m, n) (n + θ)_(m-1) p_n(x, y).

    Args:
        x (`Frequencies`):
            First point.
        y (`Frequencies`):
            Second point.
        m (`int`):
            Order, m >= 2.
        params (`Params`):
            The (α, θ) pair.
        settings (`Settings`, optional):
            Supplies the caps.

    Returns:
        `Number`: the kernel, exact when x, y and the parameters are.
    """
    if m < 2:
        raise ValueError(f"q_m is defined for m >= 2, got {m}")
    sequence = kernel_p_sequence(x, y, m, params, settings)
    theta = params.theta if is_exact(*sequence) and params.exact else float(params.theta)
    return _q_from_sequence(sequence, m, theta)


def spectral_factor(m: int, theta: Number, t: float) -> float:
    """
    ρ_m(t) = exp(-m(m + θ - 1)t / 2).
    """
    return math.exp(-m * (m + float(theta) - 1) * t / 2)


def _warn_small_time(t: float, settings: Settings) -> None:
    if t < settings.min_density_time:
        logger.warning("density at t=%s is below the reliable range t >= %s", t, settings.min_density_time)


def density_mixture(
    x: FrequenciesLike,
    y: FrequenciesLike,
    t: float,
    params: Params,
    n_max: int,
    settings: Settings = DEFAULT_SETTINGS,
) -> DensityEval:
    """
    The transition density in mixture form, d̃_1(t) + Σ_{n=2}^{n_max} d_n(t) p_n(x, y).

    The tail estimate multiplies the dropped mass Σ_{n>n_max} d_n(t) by
    max_{|η|=n_max} 1 / M_{n_max}(η); p_n has no uniform bound, so this is a
    size indication rather than a certified bound.

    Args:
        x (`Frequencies`):
            Starting point.
        y (`Frequencies`):
            End point.
        t (`float`):
            Time, t > 0.
        params (`Params`):
            The (α, θ) pair.
        n_max (`int`):
            Truncation order, at most kernel_cap.
        settings (`Settings`, optional):
            Caps and series constants.

    Returns:
        `DensityEval`: the truncated value with its tail estimate.
    """
    if not t > 0:
        raise ValueError(f"Time must be positive, got {t}")
    _check_order(n_max, settings)
    _warn_small_time(t, settings)
    floats = params.as_float()
    x, y = as_frequencies(x), as_frequencies(y)
    value = absorb_prob(floats.theta, t, settings)
    for n in range(2, n_max + 1):
        weight = death_prob_infinite(n, floats.theta, t, settings)
        value += weight * float(kernel_p_n(x, y, n, floats, settings))
    law = infinite_death_distribution(floats.theta, t, settings)
    tail_mass = float(law[n_max:].sum()) if len(law) > n_max else 0.0
    if n_max >= 1:
        worst = max(1.0 / float(ewens_pitman(eta, floats)) for eta in enumerate_partitions(n_max, settings))
    else:
        worst = 1.0
    return DensityEval(
        value=value,
        truncation_order=n_max,
        tail_estimate=tail_mass * worst,
        form="mixture",
        tail_mass=tail_mass,
    )


def density_spectral(
    x: FrequenciesLike,
    y: FrequenciesLike,
    t: float,
    params: Params,
    m_max: int,
    settings: Settings = DEFAULT_SETTINGS,
) -> DensityEval:
    """
    The transition density in spectral form, 1 + Σ_{m=2}^{m_max} ρ_m(t) q_m(x, y).

    The tail estimate extrapolates the last kept term geometrically with the
    ratio ρ_{m+1} / ρ_m at m = m_max.

    Args:
        x (`Frequencies`):
            Starting point.
        y (`Frequencies`):
            End point.
        t (`float`):
            Time, t > 0.
        params (`Params`):
            The (α, θ) pair.
        m_max (`int`):
            Truncation order, at most kernel_cap.
        settings (`Settings`, optional):
            Caps.

    Returns:
        `DensityEval`: the truncated value with its tail estimate.
    """
    if not t > 0:
        raise ValueError(f"Time must be positive, got {t}")
    _check_order(m_max, settings)
    _warn_small_time(t, settings)
    floats = params.as_float()
    sequence = [float(p) for p in kernel_p_sequence(x, y, m_max, floats, settings)]
    value = 1.0
    last = 0.0
    for m in range(2, m_max + 1):
        last = spectral_factor(m, floats.theta, t) * _q_from_sequence(sequence, m, floats.theta)
        value += last
    ratio = math.exp(-(2 * m_max + floats.theta) * t / 2)
    tail = abs(last) * ratio / (1 - ratio) if ratio < 1 else math.inf
    tail_mass = spectral_factor(m_max + 1, floats.theta, t) / (1 - ratio) if ratio < 1 else math.inf
    return DensityEval(
        value=value,
        truncation_order=m_max,
        tail_estimate=tail,
        form="spectral",
        tail_mass=tail_mass,
    )
