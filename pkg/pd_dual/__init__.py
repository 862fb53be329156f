__version__ = "0.1.0"

from pd_dual.common.config import DEFAULT_SETTINGS, Settings
from pd_dual.common.errors import (
    EnumerationLimitError,
    NegativeProbabilityError,
    NumericalError,
    PrecisionExhausted,
    SeriesTruncationError,
)
from pd_dual.common.objects import EMPTY, UNIT, Frequencies, Params, Partition
from pd_dual.partitions import (
    chi,
    dim_between,
    dim_partition,
    down_step_distribution,
    enumerate_partitions,
    hypergeom,
    is_subpartition,
    multiplicities,
)
from pd_dual.sampling import (
    check_consistency,
    eval_augmented_monomial,
    eval_sampling_prob,
    ewens_pitman,
    mean_augmented_monomial,
    up_step_distribution,
    updown_kernel,
)
from pd_dual.dual_process import (
    CoefficientMap,
    absorb_prob,
    death_prob_finite,
    death_prob_infinite,
    dual_generator_coefficients,
    dual_transition,
    generator_coefficients,
    sample_block_count_from_infinity,
    simulate_death_path,
)
from pd_dual.urns import (
    LazyFrequencies,
    conditional_partition_prob,
    polya_urn_extend,
    rn_weight,
    sample_pd_conditional,
    split_urn,
    stick_breaking_sampler,
)
from pd_dual.transition import (
    DensityEval,
    MCReport,
    density_mixture,
    density_spectral,
    empirical_representation_check,
    kernel_p_n,
    kernel_q_m,
    sample_transition,
    verify_duality,
    verify_split_urn,
)
