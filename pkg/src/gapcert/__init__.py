"""gapcert: spectral gap verification and certification for frustration-free lattice Hamiltonians."""

__version__ = "0.1.0"

from .certify import (  # noqa: E402
    CertificationResult,
    CubeRootSchedule,
    DeltaModel,
    PowerSchedule,
    pvbs_bound,
    pvbs_certify,
    pvbs_delta,
    recursion_bound,
    threshold_check,
)
from .delta import DeltaEstimate, delta_exact, delta_k_table, verify_gap_to_delta, verify_quasi_factorization  # noqa: E402
from .dl import (  # noqa: E402
    DLOperator,
    LayerSchedule,
    build_dl_operator,
    dl_functional,
    gamma_contraction,
    layer_schedule,
    split_MA_MB,
    verify_converse_dl,
    verify_dl,
    verify_sandwich,
)
from .lattice import Region, classify_region, dist, s_decompose, verify_decomposition  # noqa: E402
from .models import LocalHamiltonian, builtin_model, load_model  # noqa: E402
from .spectral import assemble, ground_projector, spectral_gap  # noqa: E402

__all__ = [name for name in dir() if not name.startswith("_")]
