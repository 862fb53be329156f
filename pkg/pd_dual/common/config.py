from dataclasses import asdict, dataclass, replace
from typing import Any, Dict


@dataclass(frozen=True)
class Settings:
    """
    Every tunable constant of the package. Functions accept an optional
    `settings` argument and fall back to `DEFAULT_SETTINGS`.

    Args:
        partition_cap (`int`):
            Largest n for which Γ_n may be enumerated.
        kernel_cap (`int`):
            Largest truncation order accepted by the density kernels.
        dim_cache_size (`int`):
            LRU bound of the branching-diagram weight cache.
        clamp_floor (`float`):
            Probabilities in [-clamp_floor, 0) are clamped to 0, lower values raise.
        relative_tolerance (`float`):
            A series value is accepted when max|term| / |value| * 2**-precision
            is below this bound.
        start_precision (`int`):
            First rung of the precision ladder, in bits.
        max_precision (`int`):
            Last rung of the precision ladder, in bits.
        tail_tolerance (`float`):
            Infinite series stop once a decreasing term drops below this
            fraction of the running sum.
        max_series_terms (`int`):
            Hard limit on the number of terms of an infinite series.
        table_mass_tolerance (`float`):
            The infinite-start table stops once its cumulative mass exceeds
            1 - table_mass_tolerance.
        z_threshold (`float`):
            |z| bound for a Monte-Carlo comparison to pass.
        p_floor (`float`):
            Minimal χ² p-value for a distributional comparison to pass.
        min_density_time (`float`):
            Density evaluations below this time are refused unless forced.
        atom_tolerance (`float`):
            Lazily realised frequencies are truncated once the unrealised
            mass drops below this value.
        max_atoms (`int`):
            Upper bound on realised atoms per frequency sample.
        stick_chunk (`int`):
            Number of sticks realised per vectorised draw.
        asymptotic_time (`float`):
            Below this time the block count coming down from infinity follows
            its normal approximation instead of the alternating series.
    """

    partition_cap: int = 80
    kernel_cap: int = 30
    dim_cache_size: int = 2**16
    clamp_floor: float = 1e-9
    relative_tolerance: float = 1e-13
    start_precision: int = 53
    max_precision: int = 8192
    tail_tolerance: float = 1e-18
    max_series_terms: int = 200_000
    table_mass_tolerance: float = 1e-12
    z_threshold: float = 3.0
    p_floor: float = 1e-3
    min_density_time: float = 0.05
    atom_tolerance: float = 1e-4
    max_atoms: int = 2000
    stick_chunk: int = 64
    asymptotic_time: float = 0.05

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def with_overrides(self, **overrides: Any) -> "Settings":
        """
        Return a copy with some fields replaced; `None` values are ignored.
        """
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **overrides)


DEFAULT_SETTINGS = Settings()
