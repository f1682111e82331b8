"""Random circle maps x -> a + x + L psi(x) + omega (mod 1) with uniform kicks.

Lyapunov exponents (Monte Carlo and quadrature against Ulam densities),
ergodicity thresholds, random-sink certificates and admissible parameter
windows, plus a deterministic sweep runner.
"""
from .arcs import ArcSet
from .atlas import (
    ParameterWindow,
    ScheduleSpec,
    compute_A_set,
    default_schedule,
    ergodicity_thresholds,
    measure_report,
)
from .circle_map import (
    MapParams,
    PsiSpec,
    compute_I_K,
    eval_tau,
    eval_tau_prime,
    image_arcset,
    largest_component_length,
    preimage_arc,
    psi_critical_points,
    tau_critical_points,
)
from .config import SweepConfig, validate_config
from .lyapunov import (
    LyapunovEstimate,
    SinkCertificate,
    birkhoff_lyapunov,
    construct_sink,
    jensen_upper_check,
    log_integral_I1,
    quadrature_lyapunov,
    verify_sink,
)
from .noise import KickStream, NoiseConfig, make_stream
from .sweep import run_sweep
from .transfer_operator import (
    DensityVector,
    Grid,
    UlamMatrix,
    build_ulam,
    check_density_sup_bound,
    ergodic_cover_check,
    refined_density_bound,
    stationary_density,
)

__all__ = [name for name in dir() if not name.startswith("_")]
