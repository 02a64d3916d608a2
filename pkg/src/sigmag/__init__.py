"""Simulation and verification of semimartingales whose drift lives on their zero set."""

from .characterization import (
    FUNCTIONALS,
    TEST_FUNCTIONS,
    MartingaleTestReport,
    TestFunction,
    ensemble_martingale_test,
    functional_sigma,
    functional_sigma_g,
    functional_sigma_nik,
    functional_sigma_r,
    martingale_test,
    martingale_test_paths,
    submartingale_sign_test,
)
from .classification import ClassReport, class_diagnostics
from .core import (
    CadlagPath,
    PathEnsemble,
    SigmaDecomposition,
    TimeGrid,
    make_grid,
    stieltjes_integral,
    total_variation,
    write_csv,
)
from .generators import (
    GeneratorSpec,
    gen_abs_bm,
    gen_absorbed_bm_martingale,
    gen_drawdown,
    gen_injection,
    gen_reset,
    gen_sigma_g,
    make_ensemble,
    map_ensemble,
)
from .pathops import (
    OrthogonalityError,
    ZeroSetIndicators,
    balayage,
    drift_split,
    local_time,
    mult_decomposition,
    product,
    scale_by_drift_function,
    tanaka_split,
    zero_set,
)
from .recovery import RecoveryReport, honest_time, recovery_check, supremum_identity_check

__version__ = "0.1.0"
