"""Pseudospectral simulation and harmonic-analysis laboratory for the
fifth-order modified KdV flow on the torus."""

from .cutoffs import CutoffFamily, DEFAULT_CUTOFFS
from .dynamics import (
    EquationCoefficients,
    ConservedQuantities,
    LinearSymbol,
    compute_constants,
    gauge_forward,
    gauge_inverse,
    renormalized_rhs,
    rhs_physical,
    verify_divergence_form,
)
from .energy import (
    ModifiedEnergyParams,
    appendix_energy,
    calibrate_as,
    comparability_check,
    difference_energy_k,
    dyadic_energy_norm,
    modified_energy_k,
    modified_energy_total,
)
from .evolve import (
    EvolveConfig,
    Trajectory,
    evolve,
    parabolic_family,
    scaling_check,
    step,
)
from .resonance import (
    is_nonresonant3,
    is_nonresonant5,
    quintic_resonant_sum,
    resonance_cubic,
    split_cubic,
    verify_factorization,
)
from .spectral import (
    FrequencyGrid,
    SpectralField,
    analyze,
    lebesgue4_norm,
    lp_project,
    sobolev_norm,
    synthesize,
)
from .xsb import (
    CounterexampleFamily,
    TimeFreqField,
    convolve3,
    exponent_sweep,
    fit_exponent,
    ratio,
    xsb_norm,
)

__version__ = "0.1.0"
