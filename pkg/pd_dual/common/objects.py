from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from math import factorial
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from pd_dual.common.numeric import Number, is_exact, to_number


class Partition(tuple):
    """
    An integer partition, i.e. a non-increasing tuple of positive integers. The
    empty partition is legal and is the unique element of Γ_0.

    Parts are always stored in descending order, so two partitions built from
    the same multiset of parts compare (and hash) equal.

    Args:
        parts (`Iterable[int]`, optional):
            The parts, in any order. Every part must be a positive integer.
    """

    def __new__(cls, parts: Iterable[int] = ()):
        parts = [int(p) for p in parts]
        if any(p < 1 for p in parts):
            raise ValueError(f"Partition parts must be positive integers, got {parts}")
        return super(Partition, cls).__new__(cls, sorted(parts, reverse=True))

    def __repr__(self):
        return "(" + ",".join(str(p) for p in self) + ")"

    def __str__(self):
        return self.__repr__()

    @cached_property
    def n(self) -> int:
        """Size |η|."""
        return sum(self)

    @property
    def d(self) -> int:
        """Length l(η)."""
        return len(self)

    @cached_property
    def multiplicities(self) -> Dict[int, int]:
        """Map from part size k to the count a_k(η)."""
        return dict(Counter(self))

    @cached_property
    def multiplicity_factorial(self) -> int:
        """The product of a_k(η)! over all part sizes."""
        return reduce(lambda acc, a: acc * factorial(a), self.multiplicities.values(), 1)

    @property
    def singletons(self) -> int:
        """a_1(η)."""
        return self.multiplicities.get(1, 0)

    def is_subpartition(self, other: Partition) -> bool:
        """
        Componentwise containment ω ⊂ η, missing parts read as 0.

        Args:
            other (`Partition`):
                The candidate superpartition η.

        Returns:
            `bool`: True iff self_i <= other_i for every i.
        """
        if len(self) > len(other):
            return False
        return all(a <= b for a, b in zip(self, other))

    def remove_one(self, part: int) -> Partition:
        """
        Decrement one part equal to `part`; a part of size 1 disappears.
        """
        if part not in self.multiplicities:
            raise ValueError(f"{self} has no part equal to {part}")
        parts = list(self)
        parts[parts.index(part)] -= 1
        return Partition(p for p in parts if p > 0)

    def add_one(self, part: int) -> Partition:
        """
        Increment one part equal to `part`; `part=0` appends a new part 1.
        """
        if part == 0:
            return Partition(list(self) + [1])
        if part not in self.multiplicities:
            raise ValueError(f"{self} has no part equal to {part}")
        parts = list(self)
        parts[parts.index(part)] += 1
        return Partition(parts)

    def sort_key(self) -> Tuple[int, Tuple[int, ...]]:
        """
        Canonical order across sizes: larger partitions first, then
        reverse-lexicographic within a size.
        """
        return -self.n, tuple(-p for p in self)

    def to_json(self) -> List[int]:
        return list(self)

    @staticmethod
    def from_string(text: str) -> Partition:
        """
        Parse "2,1", "[2,1]" or "()" into a partition.
        """
        text = text.strip().strip("[]()")
        if not text:
            return Partition()
        return Partition(int(p) for p in text.split(","))

    @staticmethod
    def from_counts(counts: Iterable[int]) -> Partition:
        """
        Project colour counts (zeros allowed) to a partition.
        """
        return Partition(c for c in counts if c > 0)


EMPTY = Partition()
UNIT = Partition((1,))


@dataclass(frozen=True)
class Params:
    """
    The parameters (α, θ) of the two-parameter Poisson-Dirichlet family.

    When both values are exact (`int` or `Fraction`) every distribution-level
    operation returns exact rationals; otherwise floats are used.

    Args:
        alpha (`Number`):
            Discount, 0 <= alpha < 1.
        theta (`Number`):
            Concentration, theta > -alpha.
    """

    alpha: Number
    theta: Number

    def __post_init__(self):
        if not 0 <= self.alpha < 1:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not self.theta + self.alpha > 0:
            raise ValueError(f"theta must exceed -alpha, got theta={self.theta}, alpha={self.alpha}")

    @staticmethod
    def of(alpha: Union[str, Number], theta: Union[str, Number]) -> Params:
        """
        Build parameters from user input; strings and ints become exact rationals.
        """
        return Params(to_number(alpha), to_number(theta))

    @property
    def exact(self) -> bool:
        return is_exact(self.alpha, self.theta)

    def as_float(self) -> Params:
        return Params(float(self.alpha), float(self.theta))

    def to_json(self) -> Dict[str, Any]:
        return {"alpha": _json_number(self.alpha), "theta": _json_number(self.theta)}


def check_theta(theta: Number) -> Number:
    """
    The block-counting process only needs theta > -1.
    """
    if not theta > -1:
        raise ValueError(f"theta must exceed -1 for the death process, got {theta}")
    return theta


@dataclass(frozen=True)
class Frequencies:
    """
    A point of the closed ordered simplex: finitely many atoms in descending
    order plus the residual (dust) mass 1 - sum(atoms).

    Atoms given as `Fraction`s keep every evaluation exact.

    Args:
        atoms (`Tuple[Number, ...]`):
            Non-negative atoms, non-increasing.
        residual (`Number`):
            Unassigned mass, within [0, 1].
    """

    atoms: Tuple[Number, ...]
    residual: Number = 0

    @staticmethod
    def from_atoms(
        atoms: Sequence[Union[str, Number]],
        residual: Optional[Number] = None,
        tolerance: float = 1e-12,
    ) -> Frequencies:
        """
        Sort, validate and complete a list of atoms.

        Args:
            atoms (`Sequence[Number]`):
                Atom masses, any order; zeros are dropped.
            residual (`Number`, optional):
                Expected residual; computed as 1 - sum(atoms) when omitted.
            tolerance (`float`, optional, default: `1e-12`):
                Slack allowed before a negative residual is an error.

        Returns:
            `Frequencies`: the validated point.
        """
        values = [to_number(a) if isinstance(a, str) else a for a in atoms]
        if any(a < 0 for a in values):
            raise ValueError(f"Atoms must be non-negative, got {values}")
        values = sorted((a for a in values if a > 0), reverse=True)
        remaining = 1 - sum(values)
        if residual is None:
            residual = remaining
        if residual < -tolerance or residual > 1 + tolerance:
            raise ValueError(f"Atoms {values} leave an invalid residual {residual}")
        if is_exact(*values, residual):
            if residual < 0:
                raise ValueError(f"Exact atoms {values} exceed total mass 1")
        else:
            residual = min(max(float(residual), 0.0), 1.0)
        return Frequencies(tuple(values), residual)

    @property
    def exact(self) -> bool:
        return is_exact(*self.atoms, self.residual)

    def is_full_mass(self, tolerance: float = 1e-12) -> bool:
        return abs(self.residual) <= tolerance

    def __len__(self):
        return len(self.atoms)

    def to_json(self) -> Dict[str, Any]:
        return {
            "atoms": [_json_number(a) for a in self.atoms],
            "residual": _json_number(self.residual),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @staticmethod
    def from_json(data: Union[str, Dict[str, Any]]) -> Frequencies:
        if isinstance(data, str):
            data = json.loads(data)
        return Frequencies.from_atoms(data["atoms"])

    @staticmethod
    def from_string(text: str) -> Frequencies:
        """
        Parse "0.6,0.4" (exact rationals) into frequencies.
        """
        return Frequencies.from_atoms([p for p in text.split(",") if p.strip()])


def _json_number(value: Number) -> Union[float, str, int]:
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return value.numerator
        return f"{value.numerator}/{value.denominator}"
    return value
