from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Any, Dict, Iterator, List, Tuple, Union

import numpy as np

from pd_dual.common.numeric import Number
from pd_dual.common.objects import EMPTY, UNIT, Frequencies, Partition
from pd_dual.sampling.ewens_pitman import sampling_prefactor

__all__ = [
    "singleton_free_expansion",
    "eval_augmented_monomial",
    "eval_sampling_prob",
    "augmented_sum",
    "as_frequencies",
]

# above this length the power-sum (set partition) formula has too many terms
_POWER_SUM_MAX_LENGTH = 6

FrequenciesLike = Union[Frequencies, Any]


def as_frequencies(x: FrequenciesLike) -> Frequencies:
    if isinstance(x, Frequencies):
        return x
    if hasattr(x, "to_frequencies"):
        return x.to_frequencies()
    raise TypeError(f"Expected frequencies, got {type(x).__name__}")


def singleton_free_expansion(eta: Partition) -> Dict[Partition, int]:
    """
    Write P̃_η as a signed integer combination of singleton-free P̃'s by
    repeatedly applying P̃_η = P̃_{η-e_i} - Σ_{j≠i} P̃_{η-e_i+e_j} to a
    singleton η_i = 1. The constant function is keyed by the partition (1).

    Each step lowers a_1(η), so the recursion terminates.

    Args:
        eta (`Partition`):
            Any partition.

    Returns:
        `Dict[Partition, int]`: coefficients over singleton-free partitions and (1).
    """
    return dict(_expansion(Partition(eta)))


@lru_cache(maxsize=4096)
def _expansion(eta: Partition) -> Tuple[Tuple[Partition, int], ...]:
    if eta == EMPTY or eta == UNIT:
        return ((UNIT, 1),)
    if eta.singletons == 0:
        return ((eta, 1),)
    reduced = eta.remove_one(1)
    terms: Dict[Partition, int] = dict(_expansion(reduced))
    for part, count in reduced.multiplicities.items():
        for key, coef in _expansion(reduced.add_one(part)):
            terms[key] = terms.get(key, 0) - count * coef
    return tuple(
        sorted(((k, c) for k, c in terms.items() if c != 0), key=lambda kv: kv[0].sort_key())
    )


def _set_partitions(items: List[int]) -> Iterator[List[List[int]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for smaller in _set_partitions(rest):
        yield [[first]] + smaller
        for i in range(len(smaller)):
            yield smaller[:i] + [[first] + smaller[i]] + smaller[i + 1 :]


@lru_cache(maxsize=1024)
def _power_sum_terms(parts: Tuple[int, ...]) -> Tuple[Tuple[int, Tuple[int, ...]], ...]:
    # Σ over distinct indices = Σ over set partitions of the parts of
    # μ(π) Π_B p_{Σ_B}, with μ(π) = Π_B (-1)^(|B|-1) (|B|-1)!
    terms: Dict[Tuple[int, ...], int] = {}
    for blocks in _set_partitions(list(range(len(parts)))):
        coef = 1
        exponents = []
        for block in blocks:
            coef *= (-1) ** (len(block) - 1) * factorial(len(block) - 1)
            exponents.append(sum(parts[i] for i in block))
        key = tuple(sorted(exponents, reverse=True))
        terms[key] = terms.get(key, 0) + coef
    return tuple((c, k) for k, c in terms.items() if c != 0)


def _power_sums(atoms: Tuple[Number, ...], exact: bool, exponents: set) -> Dict[int, Number]:
    if exact:
        return {k: sum((a**k for a in atoms), Fraction(0)) for k in exponents}
    values = np.asarray(atoms, dtype=float)
    return {k: float(np.sum(values**k)) for k in exponents}


def augmented_sum(eta: Partition, atoms: Tuple[Number, ...], exact: bool = False) -> Number:
    """
    The literal augmented monomial Σ_{i_1≠...≠i_d} x_{i_1}^{η_1} ... x_{i_d}^{η_d}
    over a finite list of atoms.

    Args:
        eta (`Partition`):
            Exponents.
        atoms (`Tuple[Number, ...]`):
            The atoms x_i.
        exact (`bool`, optional, default: `False`):
            Keep `Fraction` arithmetic.

    Returns:
        `Number`: the sum, 0 when there are fewer atoms than parts.
    """
    eta = Partition(eta)
    zero = Fraction(0) if exact else 0.0
    if eta.d == 0:
        return zero + 1
    if len(atoms) < eta.d:
        return zero
    if eta.d <= _POWER_SUM_MAX_LENGTH:
        terms = _power_sum_terms(tuple(eta))
        sums = _power_sums(atoms, exact, {k for _, key in terms for k in key})
        total = zero
        for coef, key in terms:
            product = zero + coef
            for k in key:
                product *= sums[k]
            total += product
        return total
    return _monomial_dp(eta, atoms, zero) * eta.multiplicity_factorial


def _monomial_dp(eta: Partition, atoms: Tuple[Number, ...], zero: Number) -> Number:
    # monomial symmetric function: one atom at a time, states count used parts per size
    sizes = sorted(eta.multiplicities)
    limits = tuple(eta.multiplicities[s] for s in sizes)
    table: Dict[Tuple[int, ...], Number] = {tuple(0 for _ in sizes): zero + 1}
    for atom in atoms:
        powers = [atom**s for s in sizes]
        updated = dict(table)
        for state, value in table.items():
            for j, used in enumerate(state):
                if used < limits[j]:
                    nxt = state[:j] + (used + 1,) + state[j + 1 :]
                    updated[nxt] = updated.get(nxt, zero) + value * powers[j]
        table = updated
    return table.get(limits, zero)


def eval_augmented_monomial(
    eta: Partition, x: FrequenciesLike, method: str = "elimination"
) -> Number:
    """
    Evaluate the continuous extension of P̃_η at a point of the closed simplex.

    With `method="elimination"` the singleton parts are first eliminated (see
    `singleton_free_expansion`) and the remaining singleton-free monomials are
    summed over the atoms only, the residual dust contributing nothing to
    exponents >= 2. With `method="direct"` each singleton is carried either by
    a distinct atom or by the dust (a factor r per singleton); both give the
    same function, the direct form avoids the cancellations of long
    eliminations.

    Args:
        eta (`Partition`):
            Exponents.
        x (`Frequencies`):
            The point; `LazyFrequencies` are truncated first.
        method (`str`, optional, default: `"elimination"`):
            `"elimination"` or `"direct"`.

    Returns:
        `Number`: P̃_η(x), exact for exact atoms.
    """
    eta = Partition(eta)
    x = as_frequencies(x)
    exact = x.exact
    if method == "elimination":
        total = Fraction(0) if exact else 0.0
        for key, coef in _expansion(eta):
            value = 1 if key == UNIT else augmented_sum(key, x.atoms, exact)
            total += coef * value
        return total
    if method == "direct":
        singles = eta.singletons
        base = [p for p in eta if p > 1]
        total = Fraction(0) if exact else 0.0
        for on_dust in range(singles + 1):
            weight = comb(singles, on_dust) * x.residual**on_dust
            if weight == 0:
                continue
            on_atoms = Partition(base + [1] * (singles - on_dust))
            total += weight * augmented_sum(on_atoms, x.atoms, exact)
        return total
    raise ValueError(f"Unknown method: {method}. Available methods are: `elimination`, `direct`")


def eval_sampling_prob(eta: Partition, x: FrequenciesLike, method: str = "elimination") -> Number:
    """
    P⃗_η(x) = binom(n; η) / Π a_k(η)! P̃_η(x): the probability that n draws
    with replacement from colour frequencies x show the configuration η.

    Args:
        eta (`Partition`):
            Sample configuration.
        x (`Frequencies`):
            Colour frequencies.
        method (`str`, optional, default: `"elimination"`):
            Passed to `eval_augmented_monomial`.

    Returns:
        `Number`: the sampling probability.
    """
    x = as_frequencies(x)
    return sampling_prefactor(eta, x.exact) * eval_augmented_monomial(eta, x, method)
