from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from pd_dual.common.config import DEFAULT_SETTINGS, Settings
from pd_dual.common.objects import Frequencies, Params, Partition


@dataclass(frozen=True)
class UrnState:
    """
    The generalised Pólya urn holding colour configuration ω: every colour j
    owns ω_j - 1 balls of mass 1 and one ball of mass 1 - α, and a single
    white ball of mass θ + rα stands for all unseen colours.

    Args:
        colour_counts (`Partition`):
            The non-white configuration ω.
        params (`Params`):
            The (α, θ) pair.
    """

    colour_counts: Partition
    params: Params

    @property
    def r(self) -> int:
        """Number of distinct colours l(ω)."""
        return self.colour_counts.d

    @property
    def size(self) -> int:
        return self.colour_counts.n

    @property
    def white_mass(self) -> float:
        return float(self.params.theta) + self.r * float(self.params.alpha)

    @property
    def unit_balls(self) -> int:
        return self.size - self.r

    @property
    def discounted_mass(self) -> float:
        """Total mass of the (1 - α) balls."""
        return self.r * (1 - float(self.params.alpha))

    @property
    def non_white_mass(self) -> float:
        return self.size - self.r * float(self.params.alpha)

    @property
    def total_mass(self) -> float:
        return float(self.params.theta) + self.size

    def colour_masses(self) -> List[float]:
        """Mass ω_j - α of every colour, in the order of `colour_counts`."""
        alpha = float(self.params.alpha)
        return [count - alpha for count in self.colour_counts]

    def next_ball_law(self) -> Dict[Any, float]:
        """
        Law of the next draw: colour index j -> (ω_j - α) / (θ + w), plus the
        key "new" -> (θ + rα) / (θ + w). An empty urn always yields a new colour.
        """
        if self.size == 0:
            return {"new": 1.0}
        law: Dict[Any, float] = {
            j: mass / self.total_mass for j, mass in enumerate(self.colour_masses())
        }
        law["new"] = self.white_mass / self.total_mass
        return law


class LazyFrequencies:
    """
    Frequencies realised on demand: an optional fixed head of atoms followed
    by a stick-breaking tail whose k-th stick is Beta(1 - α, θ + kα), the
    whole tail scaled by `tail_scale`. Extending never changes atoms already
    realised.

    Args:
        alpha (`float`):
            Discount of the tail.
        theta (`float`):
            Concentration of the tail.
        rng (`np.random.Generator`):
            Stream used for every future stick.
        head (`Sequence[float]`, optional):
            Atoms fixed in advance.
        tail_scale (`float`, optional, default: `1.0`):
            Mass carried by the stick-breaking tail.
        settings (`Settings`, optional):
            Supplies `stick_chunk`, `atom_tolerance` and `max_atoms`.
    """

    def __init__(
        self,
        alpha: float,
        theta: float,
        rng: np.random.Generator,
        head: Sequence[float] = (),
        tail_scale: float = 1.0,
        settings: Settings = DEFAULT_SETTINGS,
    ):
        self.alpha = float(alpha)
        self.theta = float(theta)
        self.rng = rng
        self.settings = settings
        self.head = np.asarray(head, dtype=float)
        self._sticks = np.empty(0)
        self._remaining = float(tail_scale)

    @property
    def sticks(self) -> np.ndarray:
        """Tail atoms realised so far, in size-biased order."""
        return self._sticks

    @property
    def atoms(self) -> np.ndarray:
        """Every realised atom: the head, then the tail sticks."""
        return np.concatenate((self.head, self._sticks))

    @property
    def residual(self) -> float:
        """Tail mass not yet assigned to a realised stick."""
        return self._remaining

    def extend(self, count: Optional[int] = None) -> None:
        """
        Realise `count` more sticks (a chunk by default) in one vectorised draw.
        """
        count = count or self.settings.stick_chunk
        k = np.arange(len(self._sticks) + 1, len(self._sticks) + count + 1)
        breaks = self.rng.beta(1 - self.alpha, self.theta + k * self.alpha)
        left = np.cumprod(1 - breaks)
        before = np.concatenate(([1.0], left[:-1]))
        self._sticks = np.concatenate((self._sticks, self._remaining * before * breaks))
        self._remaining *= float(left[-1])

    def draw(self, count: int) -> np.ndarray:
        """
        Indices of `count` i.i.d. draws from the frequencies, realising sticks
        until every draw lands on an atom; an index refers to `atoms`.
        """
        uniform = self.rng.random(count)
        covered = 1.0 - self._remaining
        while count and uniform.max() >= covered:
            self.extend()
            covered = 1.0 - self._remaining
        index = np.searchsorted(np.cumsum(self.atoms), uniform, side="right")
        return np.minimum(index, len(self.head) + len(self._sticks) - 1)

    def to_frequencies(
        self, tolerance: Optional[float] = None, max_atoms: Optional[int] = None
    ) -> Frequencies:
        """
        Descending atoms plus residual, realising sticks until the residual
        drops below `tolerance` or `max_atoms` atoms exist.
        """
        tolerance = self.settings.atom_tolerance if tolerance is None else tolerance
        max_atoms = self.settings.max_atoms if max_atoms is None else max_atoms
        while self._remaining > tolerance and len(self.head) + len(self._sticks) < max_atoms:
            self.extend()
        return Frequencies.from_atoms(self.atoms.tolist(), residual=self._remaining)

    def top(self, k: int) -> Frequencies:
        """
        The K largest atoms realised so far, the rest counted as residual.
        """
        atoms = np.sort(self.atoms)[::-1][:k]
        return Frequencies.from_atoms(atoms.tolist(), residual=1.0 - float(np.sum(atoms)))

    def to_json(self) -> Dict[str, Any]:
        return self.to_frequencies().to_json()


@dataclass(frozen=True)
class SplitUrnSample:
    """
    Output of the split urn: the block count D_t, the common ancestor ω and
    two independent continuations to size n. When D_t > n nothing is defined
    at size n and the partitions are None.
    """

    n: int
    block_count: int
    ancestor: Optional[Partition]
    first: Optional[Partition]
    second: Optional[Partition]

    @property
    def defined(self) -> bool:
        return self.first is not None

    def to_json(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "block_count": self.block_count,
            "ancestor": self.ancestor.to_json() if self.ancestor is not None else None,
            "first": self.first.to_json() if self.first is not None else None,
            "second": self.second.to_json() if self.second is not None else None,
            "defined": self.defined,
        }
