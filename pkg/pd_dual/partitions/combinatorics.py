from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Dict, Iterator, List, Optional, Tuple

from pd_dual.common.config import DEFAULT_SETTINGS, Settings
from pd_dual.common.errors import EnumerationLimitError
from pd_dual.common.logging_utils import get_logger
from pd_dual.common.numeric import falling, multinomial
from pd_dual.common.objects import Partition

logger = get_logger(__name__)

__all__ = [
    "iter_partitions",
    "enumerate_partitions",
    "partition_count",
    "multiplicities",
    "is_subpartition",
    "dim_partition",
    "chi",
    "chi_urn",
    "covered_by",
    "covers",
    "dim_between",
    "dim_between_paths",
    "hypergeom",
    "hypergeom_falling",
    "hypergeom_brute_force",
    "down_step_distribution",
    "down_chain_distribution",
]


def iter_partitions(n: int, largest: Optional[int] = None) -> Iterator[Partition]:
    """
    Generate Γ_n in reverse-lexicographic order, e.g. (4), (3,1), (2,2), (2,1,1),
    (1,1,1,1) for n = 4.

    Args:
        n (`int`):
            The size to partition.
        largest (`int`, optional):
            Upper bound on the first part.

    Returns:
        `Iterator[Partition]`: the partitions, each exactly once.
    """
    if n < 0:
        raise ValueError(f"Cannot partition a negative number, got {n}")
    largest = n if largest is None else min(largest, n)
    # iterative stack version of "first part, then partitions of the rest"
    stack: List[Tuple[Tuple[int, ...], int, int]] = [((), n, largest)]
    while stack:
        prefix, remaining, bound = stack.pop()
        if remaining == 0:
            yield Partition(prefix)
            continue
        # push smaller first parts first so that larger ones are popped first
        for first in range(1, min(remaining, bound) + 1):
            stack.append((prefix + (first,), remaining - first, first))


def enumerate_partitions(n: int, settings: Settings = DEFAULT_SETTINGS) -> List[Partition]:
    """
    All elements of Γ_n in canonical (reverse-lexicographic) order.

    Args:
        n (`int`):
            A non-negative integer.
        settings (`Settings`, optional):
            Supplies `partition_cap`.

    Returns:
        `List[Partition]`: Γ_n; its length is the partition number p(n).
    """
    if n > settings.partition_cap:
        raise EnumerationLimitError(
            f"Refusing to enumerate partitions of {n} above the cap {settings.partition_cap}"
        )
    return list(_enumerate_cached(n))


@lru_cache(maxsize=64)
def _enumerate_cached(n: int) -> Tuple[Partition, ...]:
    return tuple(iter_partitions(n))


@lru_cache(maxsize=None)
def partition_count(n: int) -> int:
    """
    The partition number p(n), by Euler's pentagonal recurrence.
    """
    if n < 0:
        return 0
    if n == 0:
        return 1
    total, k = 0, 1
    while True:
        first = k * (3 * k - 1) // 2
        if first > n:
            break
        sign = 1 if k % 2 else -1
        total += sign * partition_count(n - first)
        second = k * (3 * k + 1) // 2
        if second <= n:
            total += sign * partition_count(n - second)
        k += 1
    return total


def multiplicities(eta: Partition) -> Dict[int, int]:
    """
    Map from part size k to a_k(η).
    """
    return dict(eta.multiplicities)


def is_subpartition(omega: Partition, eta: Partition) -> bool:
    """
    True iff ω ⊂ η componentwise.
    """
    return Partition(omega).is_subpartition(Partition(eta))


def dim_partition(eta: Partition) -> int:
    """
    dim(η) = n! / (η_1! ... η_d!), the number of weighted paths from ∅ to η.
    """
    return multinomial(eta)


def covered_by(eta: Partition) -> Dict[Partition, int]:
    """
    The partitions ω covered by η in the branching diagram, i.e. the descending
    rearrangements of η - e_i, mapped to the edge weight χ(ω, η) = a_{η_i}(η).
    """
    return {eta.remove_one(part): count for part, count in eta.multiplicities.items()}


def covers(omega: Partition) -> List[Partition]:
    """
    The partitions λ covering ω: one existing part incremented, or a new part 1.
    """
    grown = [omega.add_one(part) for part in omega.multiplicities]
    grown.append(omega.add_one(0))
    return grown


def chi(omega: Partition, eta: Partition) -> int:
    """
    Edge weight χ(ω, η) of the branching diagram.

    Args:
        omega (`Partition`):
            Lower end of the edge.
        eta (`Partition`):
            Upper end of the edge.

    Returns:
        `int`: a_{η_i}(η) when ω is η with part η_i decremented, otherwise 0.
    """
    omega, eta = Partition(omega), Partition(eta)
    if eta.n != omega.n + 1:
        return 0
    return covered_by(eta).get(omega, 0)


def chi_urn(omega: Partition, eta: Partition) -> int:
    """
    Urn edge weight χ_B(ω, η): a_{ω_k}(ω) when η grows an existing part ω_k of
    ω, 1 when η adds a new part, 0 when η does not cover ω.
    """
    omega, eta = Partition(omega), Partition(eta)
    if eta.n != omega.n + 1:
        return 0
    for part, count in omega.multiplicities.items():
        if omega.add_one(part) == eta:
            return count
    return 1 if omega.add_one(0) == eta else 0


def dim_between(omega: Partition, eta: Partition) -> int:
    """
    Total weight dim(ω, η) of the increasing paths from ω to η, computed by the
    memoised recursion dim(ω, η) = Σ_λ dim(ω, λ) χ(λ, η) over λ covered by η.

    Args:
        omega (`Partition`):
            Start of the paths.
        eta (`Partition`):
            End of the paths.

    Returns:
        `int`: 0 when ω ⊄ η; 1 when ω = η; dim(η) when ω is empty.
    """
    return _dim_between(Partition(omega), Partition(eta))


@lru_cache(maxsize=DEFAULT_SETTINGS.dim_cache_size)
def _dim_between(omega: Partition, eta: Partition) -> int:
    if omega.n > eta.n or not omega.is_subpartition(eta):
        return 0
    if omega.n == eta.n:
        return 1
    return sum(
        _dim_between(omega, smaller) * weight
        for smaller, weight in covered_by(eta).items()
        if omega.is_subpartition(smaller)
    )


def dim_between_paths(omega: Partition, eta: Partition) -> int:
    """
    dim(ω, η) by explicit enumeration of every path (exponential, a test oracle).
    """
    omega, eta = Partition(omega), Partition(eta)
    if omega.n > eta.n or not omega.is_subpartition(eta):
        return 0
    if omega == eta:
        return 1
    return sum(
        chi(omega, larger) * dim_between_paths(larger, eta)
        for larger in covers(omega)
        if larger.is_subpartition(eta)
    )


def hypergeom(omega: Partition, eta: Partition) -> Fraction:
    """
    H(ω | η) = binom(|ω|; ω) dim(ω, η) / binom(|η|; η): the probability that
    |ω| balls drawn without replacement from a colour configuration η show the
    configuration ω.

    Args:
        omega (`Partition`):
            Sub-sample configuration.
        eta (`Partition`):
            Urn configuration.

    Returns:
        `Fraction`: the probability, 0 when ω ⊄ η.
    """
    omega, eta = Partition(omega), Partition(eta)
    if omega.n > eta.n:
        raise ValueError(f"Cannot draw {omega.n} balls from an urn of {eta.n}")
    return Fraction(dim_partition(omega) * dim_between(omega, eta), dim_partition(eta))


def hypergeom_falling(omega: Partition, eta: Partition) -> Fraction:
    """
    H(ω | η) through the falling-factorial sum
    binom(m; ω) / n_[m] Σ (η_{i_1})_[v_1] ... (η_{i_k})_[v_k], the sum running
    over index sets i_1 < ... < i_k and arrangements v of ω.
    """
    omega, eta = Partition(omega), Partition(eta)
    if omega.n > eta.n:
        raise ValueError(f"Cannot draw {omega.n} balls from an urn of {eta.n}")
    if not omega.is_subpartition(eta):
        return Fraction(0)
    # labelled assignments of the parts of ω to distinct parts of η, then unlabel
    labelled = _assignments(tuple(omega), tuple(sorted(eta.multiplicities.items())))
    total = Fraction(labelled, omega.multiplicity_factorial)
    return Fraction(dim_partition(omega)) * total / falling(eta.n, omega.n)


@lru_cache(maxsize=4096)
def _assignments(parts: Tuple[int, ...], pool: Tuple[Tuple[int, int], ...]) -> int:
    # pool holds (size, count) of the η parts still free
    if not parts:
        return 1
    head, rest = parts[0], parts[1:]
    total = 0
    for index, (size, count) in enumerate(pool):
        weight = falling(size, head)
        if weight == 0:
            continue
        remaining = list(pool)
        if count == 1:
            del remaining[index]
        else:
            remaining[index] = (size, count - 1)
        total += count * weight * _assignments(rest, tuple(remaining))
    return total


def hypergeom_brute_force(omega: Partition, eta: Partition) -> Fraction:
    """
    H(ω | η) by listing every subset of labelled balls (a test oracle).
    """
    omega, eta = Partition(omega), Partition(eta)
    balls = [colour for colour, size in enumerate(eta) for _ in range(size)]
    hits = total = 0
    for subset in combinations(range(len(balls)), omega.n):
        counts: Dict[int, int] = {}
        for ball in subset:
            counts[balls[ball]] = counts.get(balls[ball], 0) + 1
        total += 1
        hits += Partition(counts.values()) == omega
    return Fraction(hits, total)


def down_step_distribution(eta: Partition) -> Dict[Partition, Fraction]:
    """
    One step of the down chain: delete a uniformly chosen ball.

    Args:
        eta (`Partition`):
            Current configuration, non-empty.

    Returns:
        `Dict[Partition, Fraction]`: p↓(η, ω) = a_{η_i}(η) η_i / |η| on each ω covered by η.
    """
    eta = Partition(eta)
    if eta.n == 0:
        raise ValueError("The down chain is undefined on the empty partition")
    return {
        eta.remove_one(part): Fraction(count * part, eta.n)
        for part, count in eta.multiplicities.items()
    }


def down_chain_distribution(eta: Partition, steps: int) -> Dict[Partition, Fraction]:
    """
    Law of the down chain after `steps` deletions started from η.
    """
    law = {Partition(eta): Fraction(1)}
    for _ in range(steps):
        step: Dict[Partition, Fraction] = {}
        for state, mass in law.items():
            for target, prob in down_step_distribution(state).items():
                step[target] = step.get(target, Fraction(0)) + mass * prob
        law = step
    return law
