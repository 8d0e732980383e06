"""levinorm: M. Levin's 1979 construction of absolutely normal numbers as an
executable library, plus analyzers that measure the discrepancy of the
resulting orbits at desk scale."""

from .champernowne import champernowne_digit_at, champernowne_digits
from .construction import (
    CertifiedDigits,
    ConstructionState,
    SearchPolicy,
    StepRecord,
    certified_digits,
    checkpoint_load,
    checkpoint_save,
    run,
    search_a_r,
    step,
    tail_bound,
)
from .discrepancy import (
    DiscrepancyReport,
    OrbitPoints,
    PairPoints,
    corollary_bound,
    counting_N,
    discrepancy_2d,
    etk_bound,
    proof_chain_check,
    report,
    star_discrepancy,
)
from .dyadic import BaseSpec, Dyadic, UnitFixed, frac, orbit_mod1, unit_exp
from .errors import (
    BudgetExceeded,
    CapExhausted,
    CheckpointError,
    InsufficientPrecision,
    LevinormError,
    PrecisionExhausted,
    ScheduleError,
)
from .expsums import (
    BoundSet,
    PhaseContext,
    bounds_for,
    disc_sum_D,
    exp_sum_S,
    mean_square_T,
)
from .schedule import (
    BaseSequence,
    NRule,
    QRule,
    Schedule,
    SpeedSequence,
    check_q_necessary,
    check_q_sufficient,
    classify_growth,
    concatenation_feasible,
)

__version__ = "0.1.0"
