"""Fragmentation trees under Gibbs-type splitting rules: exact probabilities, samplers and checks."""
from .trees import (
    FragTree,
    Shape,
    automorphisms,
    canonical_labeling,
    count_labelings,
    relabel,
    restrict,
    shape,
    signature,
    validate,
)
from .numeric import CheckReport, InadmissibleModel, UnsupportedOperation, fmt, parse_param
from .models import (
    BetaSplitting,
    Comb,
    CouponCollector,
    EwensPitman,
    GibbsModel,
    RawGibbs,
    SingletonSplit,
    SplittingRule,
    affine_ratio_check,
    check_consistency,
    check_normalization,
    ewens_pitman,
    norm,
    psi,
    split_prob,
    tree_prob,
    weight_w,
)
from .rng import RngState
from .samplers import (
    attach,
    attachment_distribution,
    branching_law,
    growth_law,
    restriction_law,
    sample_branching,
    sample_growth,
    tv_distance,
)
from .enumeration import (
    count_fragmentations,
    enum_all,
    enum_binary,
    find_collisions,
    signature_table,
    verify_w_expansion,
)
from .rates import (
    InvalidRateSequence,
    TimedTree,
    check_complete_monotonicity,
    check_thinning,
    invert_rates,
    lambda_from_measure,
    rate_lambda,
    rate_table,
    sample_timed,
)
from .measures import beta_moment, factorization_check, paintbox_moment, quad_moment

__version__ = "0.1.0"
