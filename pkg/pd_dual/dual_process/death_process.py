import math
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Tuple, Union

import mpmath
import numpy as np
from scipy import stats

from pd_dual.common.config import DEFAULT_SETTINGS, Settings
from pd_dual.common.errors import (
    NegativeProbabilityError,
    NumericalError,
    PrecisionExhausted,
    SeriesTruncationError,
)
from pd_dual.common.logging_utils import get_logger
from pd_dual.common.numeric import Number
from pd_dual.common.objects import UNIT, Partition, check_theta
from pd_dual.common.sampler import Sampler
from pd_dual.dual_process.objects import INFINITE_START, DeathPath, DeathProbTable
from pd_dual.partitions.combinatorics import (
    down_step_distribution,
    enumerate_partitions,
    hypergeom,
)

logger = get_logger(__name__)

__all__ = [
    "death_rate",
    "death_prob_finite",
    "death_prob_infinite",
    "absorbed_mass",
    "absorb_prob",
    "block_count_moments",
    "death_table",
    "infinite_death_distribution",
    "dual_transition",
    "dual_transition_law",
    "DeathPathSampler",
    "simulate_death_path",
    "sample_block_counts",
    "sample_block_count_from_infinity",
]


def death_rate(n: int, theta: Number) -> float:
    """
    λ_n = n(n + θ - 1) / 2, the rate of leaving n lines.
    """
    return n * (n + float(theta) - 1) / 2


def _mp(value: Number) -> mpmath.mpf:
    if isinstance(value, Fraction):
        return mpmath.mpf(value.numerator) / value.denominator
    return mpmath.mpf(value)


def _validate_time(t: Number) -> float:
    if not t > 0:
        raise ValueError(f"Time must be positive, got {t}")
    return float(t)


def _partial_sum(
    l: int, theta: Number, t: Number, n: Optional[int], settings: Settings
) -> Tuple[mpmath.mpf, mpmath.mpf]:
    """
    Σ_k (-1)^(k-l) e^{-k(k+θ-1)t/2} (2k+θ-1) (l+θ)_(k-1) / (l!(k-l)!) n_[k] / (θ+n)_(k)
    at the current mpmath precision; for `n=None` the last factor is 1 and the
    sum runs until the tail test passes. Returns the sum and the largest |term|.
    """
    theta, t = _mp(theta), _mp(t)
    coefficient = mpmath.rf(l + theta, l - 1) / mpmath.factorial(l)
    if n is not None:
        coefficient *= mpmath.ff(n, l) / mpmath.rf(theta + n, l)
    total = mpmath.mpf(0)
    largest = mpmath.mpf(0)
    previous = mpmath.inf
    k = l
    while n is None or k <= n:
        term = mpmath.exp(-k * (k + theta - 1) * t / 2) * (2 * k + theta - 1) * coefficient
        if (k - l) % 2:
            term = -term
        total += term
        size = abs(term)
        largest = max(largest, size)
        if n is None:
            if size < previous and size <= settings.tail_tolerance * abs(total):
                break
            if k - l >= settings.max_series_terms:
                raise SeriesTruncationError(
                    f"Series for l={l}, theta={theta}, t={t} did not converge "
                    f"within {settings.max_series_terms} terms"
                )
            previous = size
        # ratio of consecutive coefficients
        coefficient *= (l + theta + k - 1) / (k + 1 - l)
        if n is not None:
            coefficient *= mpmath.mpf(n - k) / (theta + n + k)
        k += 1
    return total, largest


def _stabilised_series(
    l: int,
    theta: Number,
    t: Number,
    n: Optional[int],
    settings: Settings,
    start_bits: Optional[int] = None,
) -> Tuple[float, int]:
    """
    Evaluate the alternating death series on the precision ladder: the value
    is accepted once max|term| 2^-bits stays below relative_tolerance |value|.
    The ladder starts at `start_bits` when given, else at start_precision.

    Returns:
        `Tuple[float, int]`: the value and the working precision that stabilised it.
    """
    bits = min(start_bits or settings.start_precision, settings.max_precision)
    while True:
        with mpmath.workprec(bits):
            total, largest = _partial_sum(l, theta, t, n, settings)
            error = largest * mpmath.ldexp(1, -bits)
            if total != 0 and error <= settings.relative_tolerance * abs(total):
                return float(total), bits
        if bits >= settings.max_precision:
            raise PrecisionExhausted(
                f"d(n={n}, l={l}) at theta={theta}, t={t} unstable at {bits} bits"
            )
        bits = min(2 * bits, settings.max_precision)
        logger.debug("escalating precision to %d bits for n=%s l=%d t=%s", bits, n, l, t)


def _clamp(value: float, label: str, settings: Settings) -> float:
    if value < 0:
        if value < -settings.clamp_floor:
            raise NegativeProbabilityError(f"{label} evaluated to {value}")
        logger.warning("clamping %s = %g to 0", label, value)
        return 0.0
    if value > 1:
        if value > 1 + settings.clamp_floor:
            raise NumericalError(f"{label} evaluated to {value}, above 1")
        return 1.0
    return value


def _finite_with_precision(
    n: int, l: int, theta: Number, t: Number, settings: Settings
) -> Tuple[float, int]:
    check_theta(theta)
    t = _validate_time(t)
    if not 1 <= l <= n:
        raise ValueError(f"Need 1 <= l <= n, got n={n}, l={l}")
    value, bits = _stabilised_series(l, theta, t, n, settings)
    # for theta < 0 the l = 1 term is not a probability on its own
    if l >= 2 or theta >= 0:
        value = _clamp(value, f"d_{n}{l}({t})", settings)
    return value, bits


def death_prob_finite(
    n: int, l: int, theta: Number, t: Number, settings: Settings = DEFAULT_SETTINGS
) -> float:
    """
    d_{nl}(t): the probability that n lines of descent have become l lines
    after time t, where n lines are lost at rate n(n+θ-1)/2.

    Args:
        n (`int`):
            Starting number of lines.
        l (`int`):
            Target number of lines, 1 <= l <= n.
        theta (`Number`):
            Mutation parameter, theta > -1.
        t (`Number`):
            Time, t > 0.
        settings (`Settings`, optional):
            Precision ladder and clamping constants.

    Returns:
        `float`: the probability, clamped to [0, 1]; for theta < 0 and l = 1
        the raw series value, which may be negative.
    """
    return _finite_with_precision(n, l, theta, t, settings)[0]


def _infinite_with_precision(
    l: int, theta: Number, t: Number, settings: Settings, start_bits: Optional[int] = None
) -> Tuple[float, int]:
    check_theta(theta)
    t = _validate_time(t)
    if l < 1:
        raise ValueError(f"Need l >= 1, got {l}")
    value, bits = _stabilised_series(l, theta, t, None, settings, start_bits)
    if l >= 2 or theta >= 0:
        value = _clamp(value, f"d_inf{l}({t})", settings)
    return value, bits


def block_count_moments(theta: Number, t: Number) -> Tuple[float, float]:
    """
    Mean and variance of the normal law approached by the block count coming
    down from infinity as t -> 0. With β = (θ - 1)t / 2 and η = β / (e^β - 1):
    μ = 2η / t and σ² = (2η / t)(η + β)² (1 + η / (η + β) - 2η) / β², which
    tends to 2 / (3t) as β -> 0.

    Args:
        theta (`Number`):
            Mutation parameter, theta > -1.
        t (`Number`):
            Time, t > 0.

    Returns:
        `Tuple[float, float]`: the mean μ and the variance σ².
    """
    check_theta(theta)
    t = _validate_time(t)
    beta = (float(theta) - 1) * t / 2
    eta = beta / math.expm1(beta) if beta != 0 else 1.0
    mean = 2 * eta / t
    if abs(beta) < 1e-3:
        # the bracket cancels to β²/3 at leading order
        return mean, mean / 3
    spread = 1 + eta / (eta + beta) - 2 * eta
    return mean, mean * (eta + beta) ** 2 * spread / beta**2


def _normal_law(theta: float, t: float, settings: Settings) -> Tuple[float, Tuple[float, ...]]:
    # w = 1 collects the whole lower tail; the upper tail is cut at table_mass_tolerance
    mean, variance = block_count_moments(theta, t)
    sd = math.sqrt(variance)
    reach = float(stats.norm.isf(settings.table_mass_tolerance / 2))
    top = max(int(math.ceil(mean + reach * sd)), 2)
    edges = np.arange(1, top + 1) + 0.5
    cdf = stats.norm.cdf((edges - mean) / sd)
    probs = np.diff(cdf, prepend=0.0)
    probs /= probs.sum()
    return float(probs[0]), tuple(probs[1:].tolist())


@lru_cache(maxsize=128)
def _infinite_law(
    theta: float, t: float, settings: Settings
) -> Tuple[float, Tuple[float, ...], Tuple[int, ...]]:
    """
    The absorbed mass d̃_1(t), the profile d_l(t) for l = 2, 3, ... and the
    bits that stabilised each level (0 under the normal approximation).
    """
    if t < settings.asymptotic_time:
        absorbed, values = _normal_law(theta, t, settings)
        logger.info(
            "block count from infinity at t=%s < %s: normal approximation over %d levels",
            t,
            settings.asymptotic_time,
            len(values),
        )
        return absorbed, values, (0,) * len(values)
    # d_l for l = 2, 3, ... until past the peak and below tail_tolerance
    values: List[float] = []
    bits: List[int] = []
    used: Optional[int] = None
    l = 2
    while True:
        value, used = _infinite_with_precision(l, theta, t, settings, used)
        values.append(value)
        bits.append(used)
        if len(values) > 1 and value < values[-2] and value <= settings.tail_tolerance:
            break
        if l >= settings.max_series_terms:
            raise SeriesTruncationError(f"Block-count profile at t={t} did not decay")
        l += 1
    logger.debug("infinite-start profile theta=%s t=%s: %d levels", theta, t, len(values))
    absorbed = _clamp(1.0 - math.fsum(values), f"absorbed mass at t={t}", settings)
    return absorbed, tuple(values), tuple(bits)


def death_prob_infinite(
    l: int, theta: Number, t: Number, settings: Settings = DEFAULT_SETTINGS
) -> float:
    """
    d_l(t): the probability of l lines at time t for the process coming down
    from infinity. Same series as `death_prob_finite` with the n-dependent
    factor replaced by 1, truncated by the tail test of `settings`. Below
    `settings.asymptotic_time` the value is read off the normal approximation,
    where l = 1 carries the absorbed mass.
    """
    if l < 1:
        raise ValueError(f"Need l >= 1, got {l}")
    check_theta(theta)
    t = _validate_time(t)
    if t < settings.asymptotic_time:
        absorbed, values, _ = _infinite_law(float(theta), t, settings)
        if l == 1:
            return absorbed
        return values[l - 2] if l - 2 < len(values) else 0.0
    return _infinite_with_precision(l, theta, t, settings)[0]


def absorbed_mass(n: int, theta: Number, t: Number, settings: Settings = DEFAULT_SETTINGS) -> float:
    """
    d̃_{n1}(t) = 1 - Σ_{l=2}^{n} d_{nl}(t): the mass collapsed into the
    absorbing state (1). Non-negative for every theta > -1.
    """
    if n < 1:
        raise ValueError(f"Need n >= 1, got {n}")
    if n == 1:
        return 1.0
    mass = 1.0 - sum(death_prob_finite(n, l, theta, t, settings) for l in range(2, n + 1))
    return _clamp(mass, f"absorbed mass from {n}", settings)


def absorb_prob(theta: Number, t: Number, settings: Settings = DEFAULT_SETTINGS) -> float:
    """
    d̃_1(t) = 1 - Σ_{l>=2} d_l(t) for the entrance from infinity.

    Args:
        theta (`Number`):
            Mutation parameter, theta > -1.
        t (`Number`):
            Time, t > 0.
        settings (`Settings`, optional):
            Series constants.

    Returns:
        `float`: the absorbed mass, checked to be non-negative once per
        (theta, t, settings).
    """
    check_theta(theta)
    return _infinite_law(float(theta), _validate_time(t), settings)[0]


def infinite_death_distribution(
    theta: Number, t: Number, settings: Settings = DEFAULT_SETTINGS
) -> np.ndarray:
    """
    The law of the block count at time t started from infinity, as an array
    whose entry w - 1 is P(w): d̃_1 first, then d_2, d_3, ... truncated where
    the cumulative mass reaches 1 - table_mass_tolerance.
    """
    check_theta(theta)
    absorbed, values, _ = _infinite_law(float(theta), _validate_time(t), settings)
    probs = np.concatenate(([absorbed], values))
    cut = int(np.searchsorted(np.cumsum(probs), 1.0 - settings.table_mass_tolerance)) + 1
    return probs[: min(cut, len(probs))]


def death_table(
    n: Optional[int], theta: Number, t: Number, settings: Settings = DEFAULT_SETTINGS
) -> DeathProbTable:
    """
    Tabulate d_{nl}(t) for one starting value.

    Args:
        n (`int`, optional):
            Starting number of lines; `None` for the entrance from infinity.
        theta (`Number`):
            Mutation parameter, theta > -1.
        t (`Number`):
            Time, t > 0.
        settings (`Settings`, optional):
            Series constants.

    Returns:
        `DeathProbTable`: for finite n the entries l = 0..n (l = 0 is the
        complement of the others); for infinity l = 1 (absorbed mass) and
        every l >= 2 until the profile has decayed.
    """
    check_theta(theta)
    table = DeathProbTable(theta=theta, t=float(t))
    if n is None:
        absorbed, values, bits = _infinite_law(float(theta), _validate_time(t), settings)
        table.values[(INFINITE_START, 1)] = absorbed
        table.precision_used[(INFINITE_START, 1)] = max(bits)
        for l, (value, used) in enumerate(zip(values, bits), start=2):
            table.values[(INFINITE_START, l)] = value
            table.precision_used[(INFINITE_START, l)] = used
        return table
    for l in range(1, n + 1):
        value, used = _finite_with_precision(n, l, theta, t, settings)
        table.values[(n, l)] = value
        table.precision_used[(n, l)] = used
    table.values[(n, 0)] = 1.0 - sum(table.values[(n, l)] for l in range(1, n + 1))
    table.precision_used[(n, 0)] = max(table.precision_used[(n, l)] for l in range(1, n + 1))
    return table


def dual_transition(
    eta: Partition,
    omega: Partition,
    theta: Number,
    t: Number,
    settings: Settings = DEFAULT_SETTINGS,
) -> float:
    """
    q_{ηω}(t) = H(ω | η) d_{|η||ω|}(t), the transition function of the
    partition-valued dual, with (1) absorbing: for ω = (1) the whole absorbed
    mass d̃_{|η|1}(t) is returned.

    Args:
        eta (`Partition`):
            Starting partition.
        omega (`Partition`):
            Target partition, |ω| >= 1.
        theta (`Number`):
            Mutation parameter, theta > -1.
        t (`Number`):
            Time, t > 0.
        settings (`Settings`, optional):
            Series constants.

    Returns:
        `float`: the transition probability, 0 when ω ⊄ η.
    """
    eta, omega = Partition(eta), Partition(omega)
    if omega.n < 1:
        raise ValueError("The dual process never reaches the empty partition")
    if omega.n > eta.n or not omega.is_subpartition(eta):
        return 0.0
    if omega == UNIT:
        return absorbed_mass(eta.n, theta, t, settings)
    weight = float(hypergeom(omega, eta))
    return weight * death_prob_finite(eta.n, omega.n, theta, t, settings)


def dual_transition_law(
    eta: Partition, theta: Number, t: Number, settings: Settings = DEFAULT_SETTINGS
) -> Dict[Partition, float]:
    """
    The full law of the dual at time t started from η, over every ω ⊂ η with
    |ω| >= 1. Each size level is computed once and spread by H(ω | η).
    """
    eta = Partition(eta)
    law: Dict[Partition, float] = {UNIT: absorbed_mass(eta.n, theta, t, settings)}
    for size in range(2, eta.n + 1):
        level = death_prob_finite(eta.n, size, theta, t, settings)
        for omega in enumerate_partitions(size, settings):
            if omega.is_subpartition(eta):
                law[omega] = float(hypergeom(omega, eta)) * level
    return law


class DeathPathSampler(Sampler):
    """
    Simulates the partition-valued death process: from a partition of size n
    it waits an exponential time of rate n(n+θ-1)/2 and then deletes a
    uniformly chosen ball (a down-chain step), until (1) is reached.

    Args:
        theta (`Number`):
            Mutation parameter, theta > -1.
        rng (`np.random.Generator`, optional):
            Random stream.
        seed (`int`, optional):
            Seed of a fresh stream.
    """

    def __init__(self, theta: Number, rng: Optional[np.random.Generator] = None, seed: Optional[int] = None):
        super().__init__(rng, seed)
        self.theta = check_theta(theta)

    def sample(self, eta0: Partition, t_end: float) -> DeathPath:
        state = Partition(eta0)
        if state.n < 1:
            raise ValueError("Cannot start the death process from the empty partition")
        clock = 0.0
        jump_times: List[float] = []
        states: List[Partition] = [state]
        while state.n > 1:
            clock += self.rng.exponential(1.0 / death_rate(state.n, self.theta))
            if clock > t_end:
                break
            law = down_step_distribution(state)
            targets = list(law)
            weights = np.array([float(law[target]) for target in targets])
            state = targets[self.rng.choice(len(targets), p=weights)]
            jump_times.append(clock)
            states.append(state)
        return DeathPath(jump_times, states, t_end)


def simulate_death_path(
    eta0: Partition, theta: Number, t_end: float, rng: np.random.Generator
) -> DeathPath:
    """
    One trajectory of the dual death process on [0, t_end].
    """
    return DeathPathSampler(theta, rng=rng).sample(eta0, t_end)


def sample_block_counts(
    n0: int, theta: Number, t: float, size: int, rng: np.random.Generator
) -> np.ndarray:
    """
    Block counts at time t of `size` independent death processes started from
    n0 lines, simulated together.

    Args:
        n0 (`int`):
            Starting number of lines.
        theta (`Number`):
            Mutation parameter, theta > -1.
        t (`float`):
            Observation time.
        size (`int`):
            Number of independent paths.
        rng (`np.random.Generator`):
            Random stream.

    Returns:
        `np.ndarray`: integer counts in [1, n0]; 1 is absorbing.
    """
    check_theta(theta)
    theta = float(theta)
    counts = np.full(size, n0, dtype=np.int64)
    clock = np.zeros(size)
    active = counts > 1
    while active.any():
        index = np.flatnonzero(active)
        lines = counts[index]
        clock[index] += rng.exponential(2.0 / (lines * (lines + theta - 1)))
        jumped = clock[index] <= t
        counts[index[jumped]] -= 1
        active[index[~jumped]] = False
        active[index[jumped]] = counts[index[jumped]] > 1
    return counts


def sample_block_count_from_infinity(
    theta: Number,
    t: Number,
    rng: np.random.Generator,
    size: Optional[int] = None,
    settings: Settings = DEFAULT_SETTINGS,
) -> Union[int, np.ndarray]:
    """
    Draw the block count D_t of the process started from infinity by inverse
    CDF over `infinite_death_distribution`: P(1) = d̃_1(t), P(w) = d_w(t).

    Args:
        theta (`Number`):
            Mutation parameter, theta > -1.
        t (`Number`):
            Time, t > 0.
        rng (`np.random.Generator`):
            Random stream.
        size (`int`, optional):
            Number of draws; a single `int` is returned when omitted.
        settings (`Settings`, optional):
            Series constants.

    Returns:
        `Union[int, np.ndarray]`: the count(s), each >= 1.
    """
    cdf = np.cumsum(infinite_death_distribution(theta, t, settings))
    uniform = rng.random(size)
    index = np.minimum(np.searchsorted(cdf, uniform, side="right"), len(cdf) - 1)
    if size is None:
        return int(index) + 1
    return index.astype(np.int64) + 1
