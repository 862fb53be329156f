from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

from pd_dual.common.numeric import Number, format_rational
from pd_dual.common.objects import UNIT, Partition
from pd_dual.sampling.symmetric import singleton_free_expansion

INFINITE_START = math.inf


class CoefficientMap(dict):
    """
    A finite linear combination Σ c_η F_η over a partition-indexed family of
    functions (the P̃ basis or the normalised g basis). Keys are always
    canonical `Partition`s; the constant function is keyed by (1).
    """

    def __setitem__(self, key, value):
        super().__setitem__(Partition(key), value)

    def add(self, key: Partition, value: Number) -> "CoefficientMap":
        key = Partition(key)
        self[key] = self.get(key, 0) + value
        return self

    def scaled(self, factor: Number) -> "CoefficientMap":
        return CoefficientMap({key: factor * value for key, value in self.items()})

    def pruned(self, tolerance: float = 0) -> "CoefficientMap":
        """
        Drop the coefficients whose absolute value does not exceed `tolerance`.
        """
        return CoefficientMap({k: v for k, v in self.items() if abs(v) > tolerance})

    def combined(self, other: "CoefficientMap", sign: int = 1) -> "CoefficientMap":
        result = CoefficientMap(self)
        for key, value in other.items():
            result.add(key, sign * value)
        return result

    def reduced(self) -> "CoefficientMap":
        """
        Rewrite the combination over the singleton-free P̃'s plus the constant,
        a linearly independent family on the closed simplex. Only meaningful
        for maps in the P̃ basis.

        Returns:
            `CoefficientMap`: the reduced combination, zero terms removed.
        """
        result = CoefficientMap()
        for key, value in self.items():
            for basis, coef in singleton_free_expansion(key).items():
                result.add(basis, coef * value)
        return result.pruned()

    def matches(self, other: "CoefficientMap", tolerance: float = 0) -> bool:
        """
        Coefficient-wise equality, missing keys read as 0.
        """
        return not self.combined(other, sign=-1).pruned(tolerance)

    def total(self) -> Number:
        return sum(self.values(), 0)

    def constant(self) -> Number:
        return self.get(UNIT, 0)

    def sorted_items(self) -> List[Tuple[Partition, Number]]:
        return sorted(self.items(), key=lambda kv: kv[0].sort_key())

    def to_json(self) -> List[Dict[str, Any]]:
        return [
            {"partition": key.to_json(), "coefficient": format_rational(value)}
            for key, value in self.sorted_items()
        ]


@dataclass
class DeathProbTable:
    """
    Transition probabilities of the block-counting death process at one time.

    Args:
        theta (`Number`):
            Mutation parameter, theta > -1.
        t (`float`):
            Time, t > 0.
        values (`Dict[Tuple[Number, int], float]`):
            Map (n, l) -> d_{nl}(t); n is `INFINITE_START` for the entrance
            from infinity, where l = 1 holds the absorbed mass.
        precision_used (`Dict[Tuple[Number, int], int]`):
            Working precision (bits) that stabilised each value.
    """

    theta: Number
    t: float
    values: Dict[Tuple[Number, int], float] = field(default_factory=dict)
    precision_used: Dict[Tuple[Number, int], int] = field(default_factory=dict)

    def row(self, n: Optional[int] = None) -> Dict[int, float]:
        """
        The probabilities out of `n` (None for the infinite start), keyed by l.
        """
        start = INFINITE_START if n is None else n
        return {l: v for (m, l), v in sorted(self.values.items()) if m == start}

    def row_sum(self, n: Optional[int] = None) -> float:
        return math.fsum(self.row(n).values())

    @property
    def max_precision(self) -> int:
        return max(self.precision_used.values(), default=0)

    def to_rows(self, precision_report: bool = True) -> List[Dict[str, Any]]:
        rows = []
        for (n, l), value in sorted(self.values.items()):
            row = {"t": self.t, "n": "inf" if n == INFINITE_START else n, "l": l, "d": value}
            if precision_report:
                row["precision_bits"] = self.precision_used.get((n, l), 0)
            rows.append(row)
        return rows


@dataclass
class DeathPath:
    """
    One trajectory of the partition-valued death process on [0, t_end].

    Args:
        jump_times (`List[float]`):
            Increasing jump times.
        states (`List[Union[Partition, int]]`):
            The initial state followed by the state after each jump, so
            `len(states) == len(jump_times) + 1`.
        t_end (`float`):
            End of the observation window.
    """

    jump_times: List[float]
    states: List[Union[Partition, int]]
    t_end: float

    def __post_init__(self):
        if len(self.states) != len(self.jump_times) + 1:
            raise ValueError(
                f"A path with {len(self.jump_times)} jumps needs {len(self.jump_times) + 1} states, "
                f"got {len(self.states)}"
            )

    @property
    def final_state(self) -> Union[Partition, int]:
        return self.states[-1]

    def state_at(self, time: float) -> Union[Partition, int]:
        """
        The state occupied at `time`, 0 <= time <= t_end.
        """
        if not 0 <= time <= self.t_end:
            raise IndexError(f"Time {time} is outside the window [0, {self.t_end}]")
        index = 0
        while index < len(self.jump_times) and self.jump_times[index] <= time:
            index += 1
        return self.states[index]

    def to_json(self) -> Dict[str, Any]:
        return {
            "jump_times": list(self.jump_times),
            "states": [s.to_json() if isinstance(s, Partition) else s for s in self.states],
            "t_end": self.t_end,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @staticmethod
    def from_json(data: Union[str, Dict[str, Any]]) -> DeathPath:
        if isinstance(data, str):
            data = json.loads(data)
        states = [Partition(s) if isinstance(s, list) else s for s in data["states"]]
        return DeathPath(list(data["jump_times"]), states, data["t_end"])
