from typing import List, Optional

import numpy as np

from pd_dual.common.config import DEFAULT_SETTINGS, Settings
from pd_dual.common.numeric import Number
from pd_dual.common.objects import EMPTY, Frequencies, Params, Partition
from pd_dual.common.sampler import Sampler
from pd_dual.dual_process.death_process import sample_block_count_from_infinity
from pd_dual.partitions.combinatorics import chi_urn, hypergeom
from pd_dual.sampling.ewens_pitman import ewens_pitman, mean_augmented_monomial
from pd_dual.sampling.symmetric import FrequenciesLike, eval_sampling_prob
from pd_dual.urns.objects import LazyFrequencies, SplitUrnSample

__all__ = [
    "StickBreakingSampler",
    "PolyaUrnSampler",
    "ConditionalPDSampler",
    "SplitUrnSampler",
    "stick_breaking_sampler",
    "polya_urn_extend",
    "polya_urn_counts",
    "conditional_partition_prob",
    "conditional_step_probability",
    "sample_pd_conditional",
    "rn_weight",
    "split_urn",
    "frequencies_from_counts",
]


class StickBreakingSampler(Sampler):
    """
    PD(α, θ) frequencies by stick breaking: V_k ~ Beta(1 - α, θ + kα) and atom
    k equal to V_k Π_{j<k} (1 - V_j), realised lazily.

    Args:
        params (`Params`):
            The (α, θ) pair.
        rng (`np.random.Generator`, optional):
            Random stream.
        seed (`int`, optional):
            Seed of a fresh stream.
        settings (`Settings`, optional):
            Chunk size and truncation constants of the returned frequencies.
    """

    def __init__(
        self,
        params: Params,
        rng: Optional[np.random.Generator] = None,
        seed: Optional[int] = None,
        settings: Settings = DEFAULT_SETTINGS,
    ):
        super().__init__(rng, seed)
        self.params = params
        self.settings = settings

    def sample(self) -> LazyFrequencies:
        frequencies = LazyFrequencies(
            self.params.alpha, self.params.theta, self.rng, settings=self.settings
        )
        frequencies.extend()
        return frequencies


def stick_breaking_sampler(
    params: Params, rng: np.random.Generator, settings: Settings = DEFAULT_SETTINGS
) -> LazyFrequencies:
    """
    One PD(α, θ) sample in size-biased order, extendable on demand.
    """
    return StickBreakingSampler(params, rng=rng, settings=settings).sample()


class PolyaUrnSampler(Sampler):
    """
    The generalised Pólya urn at ball level. With configuration ω of size w
    and r colours the urn holds w - r balls of mass 1, r balls of mass 1 - α
    and a white ball of mass θ + rα; one uniform on [0, θ + w) decides the
    ball, so every draw costs O(1). Drawing the white ball adds a new colour.

    Args:
        params (`Params`):
            The (α, θ) pair.
        rng (`np.random.Generator`, optional):
            Random stream.
        seed (`int`, optional):
            Seed of a fresh stream.
    """

    def __init__(
        self, params: Params, rng: Optional[np.random.Generator] = None, seed: Optional[int] = None
    ):
        super().__init__(rng, seed)
        self.params = params

    def counts(self, omega: Partition, m: int) -> List[int]:
        """
        Labelled colour counts after m draws from the urn started at ω; colour
        j < l(ω) is the j-th part of ω.
        """
        if m < 0:
            raise ValueError(f"The number of draws must be non-negative, got {m}")
        alpha, theta = float(self.params.alpha), float(self.params.theta)
        counts = list(Partition(omega))
        # colour of every mass-1 ball
        units = [j for j, count in enumerate(counts) for _ in range(count - 1)]
        size = len(units) + len(counts)
        for uniform in self.rng.random(m):
            r = len(counts)
            if size == 0:
                colour = None
            else:
                position = uniform * (theta + size)
                white = theta + r * alpha
                if position < white:
                    colour = None
                elif position - white < len(units):
                    colour = units[int(position - white)]
                else:
                    colour = min(int((position - white - len(units)) / (1 - alpha)), r - 1)
            if colour is None:
                counts.append(1)
            else:
                counts[colour] += 1
                units.append(colour)
            size += 1
        return counts

    def sample(self, omega: Partition, m: int) -> Partition:
        return Partition(self.counts(omega, m))


def polya_urn_extend(omega: Partition, m: int, params: Params, rng: np.random.Generator) -> Partition:
    """
    Run the urn started at ω for m draws and project the combined colour
    counts to a partition.

    Args:
        omega (`Partition`):
            Initial configuration, possibly empty.
        m (`int`):
            Number of draws.
        params (`Params`):
            The (α, θ) pair.
        rng (`np.random.Generator`):
            Random stream.

    Returns:
        `Partition`: a configuration of size |ω| + m.
    """
    return PolyaUrnSampler(params, rng=rng).sample(omega, m)


def polya_urn_counts(omega: Partition, m: int, params: Params, rng: np.random.Generator) -> List[int]:
    return PolyaUrnSampler(params, rng=rng).counts(omega, m)


def conditional_partition_prob(eta: Partition, omega: Partition, params: Params) -> Number:
    """
    P(η | ω) = H(ω | η) M_n(η) / M_w(ω): the probability that the urn started
    at ω reaches configuration η after |η| - |ω| draws.

    Args:
        eta (`Partition`):
            Final configuration.
        omega (`Partition`):
            Initial configuration; the empty partition gives M_n(η).
        params (`Params`):
            The (α, θ) pair.

    Returns:
        `Number`: the probability, 0 when ω ⊄ η.
    """
    eta, omega = Partition(eta), Partition(omega)
    if omega.n > eta.n or not omega.is_subpartition(eta):
        return 0
    if eta == omega:
        return 1
    if omega == EMPTY:
        return ewens_pitman(eta, params)
    return hypergeom(omega, eta) * ewens_pitman(eta, params) / ewens_pitman(omega, params)


def conditional_step_probability(omega: Partition, eta: Partition, params: Params) -> Number:
    """
    One-draw urn law χ_B(ω, η) E[P̃_η] / E[P̃_ω]: (ω_k - α)/(θ + w) per colour
    of size ω_k that grows and (θ + rα)/(θ + w) for a new colour.
    """
    omega, eta = Partition(omega), Partition(eta)
    weight = chi_urn(omega, eta)
    if weight == 0:
        return 0
    return weight * mean_augmented_monomial(eta, params) / mean_augmented_monomial(omega, params)


class ConditionalPDSampler(Sampler):
    """
    PD(α, θ; ω), the frequencies seen by the urn started at ω: a mass
    Z ~ Beta(w - rα, θ + rα) split among the r observed colours by
    Dirichlet(ω_1 - α, ..., ω_r - α), the remaining 1 - Z spread by an
    independent PD(α, θ + rα).

    Args:
        params (`Params`):
            The (α, θ) pair.
        rng (`np.random.Generator`, optional):
            Random stream.
        seed (`int`, optional):
            Seed of a fresh stream.
        settings (`Settings`, optional):
            Constants of the lazy tail.
    """

    def __init__(
        self,
        params: Params,
        rng: Optional[np.random.Generator] = None,
        seed: Optional[int] = None,
        settings: Settings = DEFAULT_SETTINGS,
    ):
        super().__init__(rng, seed)
        self.params = params
        self.settings = settings

    def sample(self, omega: Partition) -> LazyFrequencies:
        omega = Partition(omega)
        alpha, theta = float(self.params.alpha), float(self.params.theta)
        if omega == EMPTY:
            return StickBreakingSampler(self.params, rng=self.rng, settings=self.settings).sample()
        w, r = omega.n, omega.d
        observed = self.rng.beta(w - r * alpha, theta + r * alpha)
        split = self.rng.dirichlet([part - alpha for part in omega])
        frequencies = LazyFrequencies(
            alpha,
            theta + r * alpha,
            self.rng,
            head=observed * split,
            tail_scale=1.0 - observed,
            settings=self.settings,
        )
        frequencies.extend()
        return frequencies


def sample_pd_conditional(
    omega: Partition, params: Params, rng: np.random.Generator, settings: Settings = DEFAULT_SETTINGS
) -> LazyFrequencies:
    """
    One draw from PD(α, θ; ω).
    """
    return ConditionalPDSampler(params, rng=rng, settings=settings).sample(omega)


def rn_weight(omega: Partition, y: FrequenciesLike, params: Params) -> float:
    """
    Density of PD(α, θ; ω) against PD(α, θ) at y: P⃗_ω(y) / E[P⃗_ω].

    Args:
        omega (`Partition`):
            Conditioning configuration.
        y (`Frequencies`):
            The point, lazily realised frequencies are truncated first.
        params (`Params`):
            The (α, θ) pair.

    Returns:
        `float`: the non-negative weight.
    """
    omega = Partition(omega)
    if omega == EMPTY:
        return 1.0
    value = eval_sampling_prob(omega, y, method="direct")
    return float(value) / float(ewens_pitman(omega, params))


class SplitUrnSampler(Sampler):
    """
    The split urn: D_t balls drawn from an empty urn give a common ancestor ω,
    then two independent continuations of ω are each run to size n.

    Args:
        params (`Params`):
            The (α, θ) pair.
        rng (`np.random.Generator`, optional):
            Random stream.
        seed (`int`, optional):
            Seed of a fresh stream.
        settings (`Settings`, optional):
            Constants of the block-count table.
    """

    def __init__(
        self,
        params: Params,
        rng: Optional[np.random.Generator] = None,
        seed: Optional[int] = None,
        settings: Settings = DEFAULT_SETTINGS,
    ):
        super().__init__(rng, seed)
        self.params = params
        self.settings = settings
        self.urn = PolyaUrnSampler(params, rng=self.rng)

    def sample(self, n: int, t: float) -> SplitUrnSample:
        if n < 1:
            raise ValueError(f"The split urn needs n >= 1, got {n}")
        block_count = sample_block_count_from_infinity(
            self.params.theta, t, self.rng, settings=self.settings
        )
        if block_count > n:
            return SplitUrnSample(n, block_count, None, None, None)
        ancestor = self.urn.sample(EMPTY, block_count)
        first = self.urn.sample(ancestor, n - block_count)
        second = self.urn.sample(ancestor, n - block_count)
        return SplitUrnSample(n, block_count, ancestor, first, second)


def split_urn(
    n: int, t: float, params: Params, rng: np.random.Generator, settings: Settings = DEFAULT_SETTINGS
) -> SplitUrnSample:
    """
    One draw of the split urn at size n and time t.

    Args:
        n (`int`):
            Size of both continuations.
        t (`float`):
            Time, t > 0.
        params (`Params`):
            The (α, θ) pair.
        rng (`np.random.Generator`):
            Random stream.
        settings (`Settings`, optional):
            Constants of the block-count table.

    Returns:
        `SplitUrnSample`: undefined (both partitions None) when D_t > n.
    """
    return SplitUrnSampler(params, rng=rng, settings=settings).sample(n, t)


def frequencies_from_counts(counts: List[int]) -> Frequencies:
    """
    Normalised colour counts as a full-mass point of the simplex.
    """
    total = sum(counts)
    return Frequencies.from_atoms([count / total for count in counts], residual=0.0)
