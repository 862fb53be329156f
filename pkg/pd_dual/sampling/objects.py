from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

from pd_dual.common.numeric import Number, format_rational
from pd_dual.common.objects import Params, Partition


@dataclass
class ConsistencyReport:
    """
    Outcome of checking Kingman's consistency condition between Γ_{n-1} and Γ_n.

    Args:
        n (`int`):
            The larger size.
        params (`Params`):
            Parameters of the partition structure.
        max_discrepancy (`Number`):
            Largest |M_{n-1}(ω) - Σ_η p↓(η, ω) M_n(η)| over ω ∈ Γ_{n-1}.
        discrepancies (`List[Tuple[Partition, Number]]`):
            The discrepancy of every ω.
    """

    n: int
    params: Params
    max_discrepancy: Number
    discrepancies: List[Tuple[Partition, Number]] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return self.max_discrepancy == 0

    def to_json(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "params": self.params.to_json(),
            "max_discrepancy": format_rational(self.max_discrepancy),
            "consistent": self.consistent,
        }
