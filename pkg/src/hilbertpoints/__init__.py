"""Hilbert points of L^p spaces of vector-valued functions on finite
probability spaces: certification, Rademacher sum classification and the
supporting plane geometry."""

__version__ = "0.1.0"

from .space import (  # noqa: E402
    Field,
    ProbSpace,
    SizeError,
    StructuralError,
    conjugate,
    covariance,
    expectation,
    inner_product,
    p_norm,
    parse_exponent,
)
from .certify import (  # noqa: E402
    DualWitness,
    HilbertVerdict,
    Status,
    TrivialFieldError,
    UnsupportedExponentError,
    dual_witness,
    gradient_residual,
    norm_spread,
    projection_apply,
    projection_pnorm,
    sup_witness,
    two_valued_check,
)
from .oracle import OracleOptions, hilbert_oracle  # noqa: E402
from .rademacher import (  # noqa: E402
    Case,
    CaseLabel,
    RademacherSum,
    TrivialSumError,
    classify,
    expand,
    independence_inequality_check,
    make_case_a,
    make_case_b,
    make_case_c,
)
from .geometry import (  # noqa: E402
    VectorFamily,
    lemma1a_decompose,
    lemma1b_orthogonality,
    lemma2_search,
    lemma3_check,
    subset_sum,
)
