"""TM Casimir self free energy and entropy of a plasma-shell sphere.

Everything is dimensionless in units of the sphere radius: inputs are the
coupling lambda0 and the temperature t = aT, outputs are a*F and a*S.
"""

from .specfun import (
    ModeIndex,
    ComplexPoint,
    RangeError,
    riccati_s,
    riccati_e,
    riccati_s_prime,
    riccati_e_prime,
    f_H,
    calJ,
    calY,
    f_H_imag_axis,
    f_H_series,
    digamma_re_shifted,
)
from .phase import ModePhaseTerm, SingularitySet, arg_branch, mode_phase, find_denominator_zeros
from .quadrature import (
    QuadratureConfig,
    QuadratureResult,
    ModeSumResult,
    bose_integral,
    pv_bose_integral,
    mode_sum,
)
from .freeenergy import (
    ShellParams,
    FreeEnergySample,
    EntropySample,
    exact_aF,
    weak1_aF,
    lowT_closed_aF,
    lowT_integral_aF,
    strong_lowT_aF,
    weak_lowT_aF,
    highT_aF,
    highT_aS,
    lowT_log_series,
    entropy,
    compute_sample,
    METHODS,
)

__version__ = "0.1.0"
