from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from rich.console import Console
from rich.progress import track
from scipy import stats

from pd_dual.common.config import DEFAULT_SETTINGS, Settings
from pd_dual.common.logging_utils import get_logger
from pd_dual.common.objects import EMPTY, Frequencies, Params, Partition
from pd_dual.common.sampler import Sampler
from pd_dual.dual_process.death_process import (
    absorb_prob,
    absorbed_mass,
    death_prob_finite,
    death_prob_infinite,
    sample_block_count_from_infinity,
)
from pd_dual.partitions.combinatorics import enumerate_partitions, hypergeom
from pd_dual.sampling.ewens_pitman import ewens_pitman, mean_augmented_monomial, sampling_prefactor
from pd_dual.sampling.symmetric import FrequenciesLike, as_frequencies, eval_augmented_monomial
from pd_dual.transition.objects import BonferroniSummary, MCReport
from pd_dual.urns.objects import LazyFrequencies
from pd_dual.urns.samplers import (
    ConditionalPDSampler,
    PolyaUrnSampler,
    SplitUrnSampler,
    StickBreakingSampler,
    conditional_partition_prob,
    rn_weight,
)

logger = get_logger(__name__)

# progress bars stay off stdout, which carries the records
_progress_console = Console(stderr=True)

__all__ = [
    "TransitionSampler",
    "sample_transition",
    "transition_moment",
    "transition_sampling_prob",
    "verify_duality",
    "empirical_representation_check",
    "representation_trend",
    "split_urn_joint_law",
    "verify_split_urn",
    "verify_urn_conditional",
    "verify_rn_weight",
    "bonferroni_summary",
]


class TransitionSampler(Sampler):
    """
    Exact fixed-time sampler of the diffusion started at x: draw the block
    count w = D_t from infinity; for w = 1 return a fresh PD(α, θ) sample,
    otherwise draw w individuals from x, project their colours to a partition
    ω and return a PD(α, θ; ω) sample.

    Draws that land in the dust of a plain `Frequencies` each found a new
    colour of their own.

    Args:
        params (`Params`):
            The (α, θ) pair.
        rng (`np.random.Generator`, optional):
            Random stream.
        seed (`int`, optional):
            Seed of a fresh stream.
        settings (`Settings`, optional):
            Block-count table and lazy-tail constants.
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
        self.conditional = ConditionalPDSampler(params, rng=self.rng, settings=settings)

    def sample_configuration(self, x: FrequenciesLike, w: int) -> Partition:
        """
        Colour configuration of w individuals drawn with replacement from x.
        """
        if isinstance(x, LazyFrequencies):
            return Partition.from_counts(Counter(x.draw(w).tolist()).values())
        masses = [float(a) for a in x.atoms] + [float(x.residual)]
        total = sum(masses)
        counts = self.rng.multinomial(w, [m / total for m in masses])
        return Partition(list(Partition.from_counts(counts[:-1])) + [1] * int(counts[-1]))

    def sample(self, x: FrequenciesLike, t: float) -> LazyFrequencies:
        w = sample_block_count_from_infinity(self.params.theta, t, self.rng, settings=self.settings)
        if w == 1:
            return self.conditional.sample(EMPTY)
        return self.conditional.sample(self.sample_configuration(x, w))


def sample_transition(
    x: FrequenciesLike,
    t: float,
    params: Params,
    rng: np.random.Generator,
    settings: Settings = DEFAULT_SETTINGS,
) -> LazyFrequencies:
    """
    One draw of X_t given X_0 = x, as lazily realised frequencies.
    """
    return TransitionSampler(params, rng=rng, settings=settings).sample(x, t)


def transition_moment(
    eta: Partition,
    x: FrequenciesLike,
    t: float,
    params: Params,
    settings: Settings = DEFAULT_SETTINGS,
) -> float:
    """
    E_x[P̃_η(X_t)] as the finite sum
    E[P̃_η] (d̃_{n1}(t) + Σ_{w=2}^{n} d_{nw}(t) Σ_{|ω|=w, ω⊂η} H(ω | η) P̃_ω(x) / E[P̃_ω]).

    Args:
        eta (`Partition`):
            A partition with |η| >= 1.
        x (`Frequencies`):
            Starting point.
        t (`float`):
            Time, t > 0.
        params (`Params`):
            The (α, θ) pair.
        settings (`Settings`, optional):
            Series constants.

    Returns:
        `float`: the moment; it tends to P̃_η(x) as t -> 0.
    """
    eta = Partition(eta)
    if eta.n < 1:
        raise ValueError("The moment expansion needs |η| >= 1")
    x = as_frequencies(x)
    floats = params.as_float()
    inner = absorbed_mass(eta.n, floats.theta, t, settings)
    for w in range(2, eta.n + 1):
        level = death_prob_finite(eta.n, w, floats.theta, t, settings)
        if level == 0:
            continue
        for omega in enumerate_partitions(w, settings):
            if not omega.is_subpartition(eta):
                continue
            value = float(eval_augmented_monomial(omega, x, method="direct"))
            inner += level * float(hypergeom(omega, eta)) * value / mean_augmented_monomial(omega, floats)
    return mean_augmented_monomial(eta, floats) * inner


def transition_sampling_prob(
    eta: Partition,
    x: FrequenciesLike,
    t: float,
    params: Params,
    settings: Settings = DEFAULT_SETTINGS,
) -> float:
    """
    E_x[P⃗_η(X_t)]: the law of the configuration of |η| individuals sampled
    from the diffusion at time t; sums to 1 over Γ_n.
    """
    eta = Partition(eta)
    return float(sampling_prefactor(eta)) * transition_moment(eta, x, t, params, settings)


def _split_trials(trials: int, workers: int) -> List[int]:
    base, extra = divmod(trials, workers)
    return [base + (1 if i < extra else 0) for i in range(workers)]


def _run_sharded(
    shard: Callable[..., Any],
    trials: int,
    rng: np.random.Generator,
    workers: int,
    arguments: Tuple[Any, ...],
) -> List[Any]:
    """
    Run `shard(rng_i, trials_i, *arguments)` on independent child streams of
    `rng`; the result depends on (seed, workers) only.
    """
    if workers < 1:
        raise ValueError(f"Need at least one worker, got {workers}")
    if workers == 1:
        return [shard(rng, trials, *arguments)]
    streams = Sampler.spawn(rng, workers)
    counts = _split_trials(trials, workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(shard, s, c, *arguments) for s, c in zip(streams, counts)]
        return [f.result() for f in futures]


def _duality_shard(
    rng: np.random.Generator,
    trials: int,
    eta: Partition,
    x: Frequencies,
    t: float,
    params: Params,
    settings: Settings,
    progress: bool = False,
) -> Tuple[float, float, int]:
    sampler = TransitionSampler(params, rng=rng, settings=settings)
    total = total_squares = 0.0
    steps = range(trials)
    if progress:
        steps = track(steps, description="Sampling X_t...", console=_progress_console)
    for _ in steps:
        value = float(eval_augmented_monomial(eta, sampler.sample(x, t), method="direct"))
        total += value
        total_squares += value * value
    return total, total_squares, trials


def verify_duality(
    eta: Partition,
    x: FrequenciesLike,
    t: float,
    params: Params,
    trials: int,
    rng: np.random.Generator,
    workers: int = 1,
    settings: Settings = DEFAULT_SETTINGS,
    progress: bool = False,
) -> MCReport:
    """
    Compare the exact moment expansion of E_x[P̃_η(X_t)] with the mean of
    P̃_η over `trials` exact draws of X_t.

    Args:
        eta (`Partition`):
            A partition with |η| >= 1.
        x (`Frequencies`):
            Starting point; lazily realised frequencies are truncated once so
            that every trial sees the same point.
        t (`float`):
            Time, t > 0.
        params (`Params`):
            The (α, θ) pair.
        trials (`int`):
            Number of draws.
        rng (`np.random.Generator`):
            Random stream; shards use its spawned children.
        workers (`int`, optional, default: `1`):
            Number of processes.
        settings (`Settings`, optional):
            Thresholds and series constants.
        progress (`bool`, optional, default: `False`):
            Show a progress bar (single worker only).

    Returns:
        `MCReport`: the z-score verdict.
    """
    eta = Partition(eta)
    x = as_frequencies(x)
    exact = transition_moment(eta, x, t, params, settings)
    parts = _run_sharded(
        _duality_shard, trials, rng, workers, (eta, x, t, params, settings, progress and workers == 1)
    )
    total, total_squares, count = MCReport.merge_moments(parts)
    report = MCReport.from_moments(f"duality {eta}", exact, total, total_squares, count, settings)
    report.details.update({"eta": eta.to_json(), "x": x.to_json(), "t": t, "workers": workers})
    logger.info("duality %s t=%s: z=%.3f (%d trials)", eta, t, report.z_score, count)
    return report


def empirical_representation_check(
    n_max: int,
    params: Params,
    reps: int,
    rng: np.random.Generator,
    settings: Settings = DEFAULT_SETTINGS,
    progress: bool = False,
) -> MCReport:
    """
    Run the urn from empty to n_max balls `reps` times and compare the mean of
    φ₂ = Σ (η_i / n)² with its exact finite-n value
    ((n - 1) / n) E[P̃_(2)] + 1 / n, which tends to E[P̃_(2)].

    Args:
        n_max (`int`):
            Urn size, >= 1.
        params (`Params`):
            The (α, θ) pair.
        reps (`int`):
            Number of urn runs.
        rng (`np.random.Generator`):
            Random stream.
        settings (`Settings`, optional):
            Thresholds.
        progress (`bool`, optional, default: `False`):
            Show a progress bar.

    Returns:
        `MCReport`: the verdict; details hold the uncorrected discrepancy and
        the mean largest normalised part.
    """
    if n_max < 1:
        raise ValueError(f"The urn needs at least one ball, got n_max={n_max}")
    urn = PolyaUrnSampler(params, rng=rng)
    squares, largest = np.empty(reps), np.empty(reps)
    steps = range(reps)
    if progress:
        steps = track(steps, description="Running urns...", console=_progress_console)
    for i in steps:
        counts = np.asarray(urn.counts(EMPTY, n_max), dtype=float) / n_max
        squares[i] = float(np.sum(counts**2))
        largest[i] = float(counts.max())
    limit = float(mean_augmented_monomial(Partition((2,)), params.as_float()))
    exact = (n_max - 1) / n_max * limit + 1 / n_max
    report = MCReport.from_samples(f"representation n={n_max}", exact, squares, settings)
    report.details.update(
        {
            "limit": limit,
            "uncorrected_discrepancy": report.estimate - limit,
            "largest_part_mean": float(largest.mean()),
        }
    )
    return report


def representation_trend(
    sizes: Sequence[int],
    params: Params,
    reps: int,
    rng: np.random.Generator,
    batches: int = 5,
    settings: Settings = DEFAULT_SETTINGS,
) -> Dict[int, float]:
    """
    Median over `batches` of the Kolmogorov-Smirnov distance between φ₂ of
    the normalised urn configuration at size n and P̃_(2)(X) for X ~ PD(α, θ);
    the distances shrink as n grows.

    Returns:
        `Dict[int, float]`: size -> median KS statistic.
    """
    urn = PolyaUrnSampler(params, rng=rng)
    sticks = StickBreakingSampler(params, rng=rng, settings=settings)
    trend = {}
    for n in sizes:
        distances = []
        for _ in range(batches):
            urn_values = []
            for _ in range(reps):
                counts = np.asarray(urn.counts(EMPTY, n), dtype=float) / n
                urn_values.append(float(np.sum(counts**2)))
            reference = [
                float(eval_augmented_monomial(Partition((2,)), sticks.sample())) for _ in range(reps)
            ]
            distances.append(stats.ks_2samp(urn_values, reference).statistic)
        trend[n] = float(np.median(distances))
    return trend


def split_urn_joint_law(
    n: int, t: float, params: Params, settings: Settings = DEFAULT_SETTINGS
) -> Dict[Tuple[Partition, Partition], float]:
    """
    Joint law of the two split-urn continuations conditioned on D_t <= n:
    Σ_{w<=n} d_w(t) Σ_{|ω|=w} M_w(ω) P(η | ω) P(η' | ω), renormalised by
    Σ_{w<=n} d_w(t) (d̃_1 in place of d_1).
    """
    floats = params.as_float()
    level = {1: absorb_prob(floats.theta, t, settings)}
    for w in range(2, n + 1):
        level[w] = death_prob_infinite(w, floats.theta, t, settings)
    norm = sum(level.values())
    targets = enumerate_partitions(n, settings)
    law: Dict[Tuple[Partition, Partition], float] = {}
    for w, weight in level.items():
        for omega in enumerate_partitions(w, settings):
            ancestor = weight * float(ewens_pitman(omega, floats))
            continuation = [float(conditional_partition_prob(eta, omega, floats)) for eta in targets]
            for i, first in enumerate(targets):
                if continuation[i] == 0:
                    continue
                for j, second in enumerate(targets):
                    cell = ancestor * continuation[i] * continuation[j] / norm
                    law[(first, second)] = law.get((first, second), 0.0) + cell
    return law


def _split_urn_shard(
    rng: np.random.Generator, trials: int, n: int, t: float, params: Params, settings: Settings
) -> Tuple[Counter, int]:
    sampler = SplitUrnSampler(params, rng=rng, settings=settings)
    observed: Counter = Counter()
    undefined = 0
    for _ in range(trials):
        draw = sampler.sample(n, t)
        if draw.defined:
            observed[(draw.first, draw.second)] += 1
        else:
            undefined += 1
    return observed, undefined


def verify_split_urn(
    n: int,
    t: float,
    params: Params,
    trials: int,
    rng: np.random.Generator,
    workers: int = 1,
    settings: Settings = DEFAULT_SETTINGS,
) -> MCReport:
    """
    χ² comparison of the split urn's joint law on Γ_n × Γ_n, conditioned on
    D_t <= n, with `split_urn_joint_law`.

    Args:
        n (`int`):
            Size, small enough for Γ_n × Γ_n to be enumerated (n <= 6).
        t (`float`):
            Time, t > 0.
        params (`Params`):
            The (α, θ) pair.
        trials (`int`):
            Number of split-urn draws, undefined draws included.
        rng (`np.random.Generator`):
            Random stream.
        workers (`int`, optional, default: `1`):
            Number of processes.
        settings (`Settings`, optional):
            Thresholds.

    Returns:
        `MCReport`: the χ² verdict with per-cell counts.
    """
    if not 1 <= n <= 6:
        raise ValueError(f"The exact joint law is enumerated for 1 <= n <= 6, got {n}")
    law = split_urn_joint_law(n, t, params, settings)
    observed: Counter = Counter()
    undefined = 0
    for part_counts, part_undefined in _run_sharded(
        _split_urn_shard, trials, rng, workers, (n, t, params, settings)
    ):
        observed.update(part_counts)
        undefined += part_undefined
    cells = sorted(law, key=lambda pair: (pair[0].sort_key(), pair[1].sort_key()))
    report = MCReport.from_counts(
        f"split urn n={n}",
        [f"{a}|{b}" for a, b in cells],
        [observed.get(cell, 0) for cell in cells],
        [law[cell] for cell in cells],
        settings,
    )
    report.details.update({"undefined_draws": undefined, "t": t})
    return report


def verify_urn_conditional(
    omega: Partition,
    m: int,
    params: Params,
    trials: int,
    rng: np.random.Generator,
    settings: Settings = DEFAULT_SETTINGS,
) -> MCReport:
    """
    χ² comparison of the urn started at ω and run for m draws with the exact
    conditional law H(ω | η) M_n(η) / M_w(ω).

    Args:
        omega (`Partition`):
            Initial configuration.
        m (`int`):
            Number of draws.
        params (`Params`):
            The (α, θ) pair.
        trials (`int`):
            Number of urn runs.
        rng (`np.random.Generator`):
            Random stream.
        settings (`Settings`, optional):
            Thresholds.

    Returns:
        `MCReport`: the χ² verdict with per-cell counts.
    """
    omega = Partition(omega)
    urn = PolyaUrnSampler(params, rng=rng)
    observed = Counter(urn.sample(omega, m) for _ in range(trials))
    targets = [eta for eta in enumerate_partitions(omega.n + m, settings) if omega.is_subpartition(eta)]
    probabilities = [float(conditional_partition_prob(eta, omega, params)) for eta in targets]
    report = MCReport.from_counts(
        f"urn from {omega} + {m}",
        [str(eta) for eta in targets],
        [observed.get(eta, 0) for eta in targets],
        probabilities,
        settings,
    )
    report.details.update({"omega": omega.to_json(), "m": m})
    return report


def verify_rn_weight(
    omega: Partition,
    eta: Partition,
    params: Params,
    trials: int,
    rng: np.random.Generator,
    settings: Settings = DEFAULT_SETTINGS,
) -> MCReport:
    """
    Two-sample check of the density of PD(α, θ; ω) against PD(α, θ): the mean
    of P̃_η(Y) rn_weight(ω, Y) over Y ~ PD(α, θ) against the mean of P̃_η over
    direct PD(α, θ; ω) draws. `exact_value` is the direct mean and the standard
    error pools both samples.
    """
    omega, eta = Partition(omega), Partition(eta)
    sticks = StickBreakingSampler(params, rng=rng, settings=settings)
    conditional = ConditionalPDSampler(params, rng=rng, settings=settings)
    weighted, direct = np.empty(trials), np.empty(trials)
    for i in range(trials):
        y = as_frequencies(sticks.sample())
        weighted[i] = float(eval_augmented_monomial(eta, y, method="direct")) * rn_weight(omega, y, params)
        direct[i] = float(eval_augmented_monomial(eta, conditional.sample(omega), method="direct"))
    left = MCReport.from_samples("weighted", 0.0, weighted, settings)
    right = MCReport.from_samples("direct", 0.0, direct, settings)
    std_error = float(np.hypot(left.std_error, right.std_error))
    gap = left.estimate - right.estimate
    z_score = gap / std_error if std_error > 0 else 0.0
    return MCReport(
        name=f"rn weight {omega} on {eta}",
        exact_value=right.estimate,
        estimate=left.estimate,
        std_error=std_error,
        trials=trials,
        z_score=z_score,
        passed=abs(z_score) <= settings.z_threshold,
        p_value=float(2 * stats.norm.sf(abs(z_score))),
        details={"direct_std_error": right.std_error, "weighted_std_error": left.std_error},
    )


def bonferroni_summary(
    reports: Iterable[MCReport], family_alpha: Optional[float] = None, settings: Settings = DEFAULT_SETTINGS
) -> BonferroniSummary:
    """
    Family-wise verdict over a grid of reports with the Bonferroni correction.

    Args:
        reports (`Iterable[MCReport]`):
            The individual comparisons; each needs a p-value.
        family_alpha (`float`, optional):
            Family-wise level, `settings.p_floor` by default.
        settings (`Settings`, optional):
            Supplies the default level.

    Returns:
        `BonferroniSummary`: the failures at level family_alpha / tests.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("Cannot summarise an empty grid of reports")
    family_alpha = settings.p_floor if family_alpha is None else family_alpha
    per_test = family_alpha / len(reports)
    p_values = [1.0 if r.p_value is None else r.p_value for r in reports]
    failures = [r.name for r, p in zip(reports, p_values) if p < per_test]
    return BonferroniSummary(
        tests=len(reports),
        family_alpha=family_alpha,
        per_test_alpha=per_test,
        min_p_value=min(p_values),
        failures=failures,
    )
