"""TM free energy of the plasma-shell sphere in every tractable regime.

All quantities are dimensionless: inputs are the coupling lambda0 and the
temperature t = aT, outputs a*F and a*S = -d(aF)/dt.  The exact route is
the real-frequency representation

    a dF = -(1/pi) int_0^inf dx (e^{2 pi x/alpha} - 1)^{-1}
                    sum_{l>=1} (2l+1) arg[-x^2 - lambda0 f_H(l, ix)],

whose temperature-independent companion piece (the divergent vacuum energy)
and the coupling-independent subtraction never need numeric evaluation: the
formula above is already the finite, subtracted object.  The closed-form
regimes (weak coupling, low temperature in closed and integral form, the
strong-coupling t^4 law, the weak-coupling t^2 law, high temperature) give
the consistency web the tests pin down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import phase as phase_mod
from . import specfun
from .quadrature import QuadratureConfig, bose_integral, pv_bose_integral

__all__ = [
    "ShellParams",
    "FreeEnergySample",
    "EntropySample",
    "exact_aF",
    "weak1_aF",
    "lowT_closed_aF",
    "lowT_integral_aF",
    "strong_lowT_aF",
    "weak_lowT_aF",
    "highT_aF",
    "highT_aS",
    "lowT_log_series",
    "entropy",
    "compute_sample",
    "METHODS",
    "LOWT_INTEGRAL_FORMS",
]

METHODS = ("exact", "weak1", "lowT_closed", "lowT_integral", "strong_lowT", "weak_lowT", "highT")
LOWT_INTEGRAL_FORMS = ("arctan", "linearized")


@dataclass(frozen=True)
class ShellParams:
    """Physical inputs: coupling lambda0 > 0 and temperature t = aT > 0."""

    lambda0: float
    t: float

    def __post_init__(self):
        if not (self.lambda0 > 0) or not math.isfinite(self.lambda0):
            raise ValueError(f"lambda0 must be positive, got {self.lambda0!r}")
        if not (self.t > 0) or not math.isfinite(self.t):
            raise ValueError(f"t must be positive, got {self.t!r}")

    @property
    def alpha(self) -> float:
        return 2.0 * math.pi * self.t

    @property
    def xi(self) -> float:
        return self.alpha * math.sqrt(1.5 / self.lambda0)


@dataclass(frozen=True)
class FreeEnergySample:
    params: ShellParams
    method: str
    aF: float
    error_estimate: float = 0.0
    l_max: int | None = None
    flags: tuple[str, ...] = ()

    @property
    def converged(self) -> bool:
        return "unconverged" not in self.flags


@dataclass(frozen=True)
class EntropySample:
    params: ShellParams
    method: str
    aS: float
    stencil_h: float
    error_estimate: float = 0.0
    flags: tuple[str, ...] = ()


# --------------------------------------------------------------------------
# exact route
# --------------------------------------------------------------------------

class _PhaseSumIntegrand:
    """Vectorized sum over l of (2l+1) * mode phase; tracks diagnostics."""

    vectorized = True

    def __init__(self, lambda0: float, config: QuadratureConfig):
        self.lambda0 = lambda0
        self.config = config
        self.l_max = 0
        self.unconverged = False

    def __call__(self, xs):
        xs = np.asarray(xs, dtype=float)
        vals = np.empty(xs.size)
        degr = np.zeros(xs.size, dtype=bool)
        # group abscissae by magnitude so small-x panels are not charged the
        # ladder depth that only the largest x in the batch needs
        buckets = np.ceil(np.log2(np.maximum(xs, 8.0))).astype(int)
        for b in np.unique(buckets):
            sel = buckets == b
            v, lmx, ok, dg = phase_mod.phase_sum_batch(
                xs[sel],
                self.lambda0,
                rel_tol=self.config.rel_tol,
                l_hard_cap=self.config.l_hard_cap,
                precision=self.config.precision,
                cancel_bound=self.config.cancel_bound,
            )
            vals[sel] = v
            degr[sel] = dg
            self.l_max = max(self.l_max, int(np.max(lmx)))
            if not np.all(ok):
                self.unconverged = True
        return vals, degr


def exact_aF(params: ShellParams, config: QuadratureConfig | None = None) -> FreeEnergySample:
    """Exact TM free energy from the real-frequency mode-phase integral."""
    config = config or QuadratureConfig()
    alpha = params.alpha
    x_max = math.ceil(alpha * math.log(1.0 / config.tail_cut_weight)
                      / (2.0 * math.pi) / (math.pi / 2.0)) * (math.pi / 2.0)
    l_top = max(10, 2 * math.ceil(x_max))
    breakpoints = phase_mod.collect_breakpoints(params.lambda0, x_max, l_top)
    f = _PhaseSumIntegrand(params.lambda0, config)
    qr = bose_integral(f, alpha, breakpoints, config)
    flags = []
    if not qr.converged:
        flags.append("unconverged")
    if qr.degraded:
        flags.append("degraded_precision")
    if f.unconverged:
        flags.append("mode_sum_unconverged")
    return FreeEnergySample(
        params=params,
        method="exact",
        aF=-qr.value / math.pi,
        error_estimate=qr.error_estimate / math.pi,
        l_max=f.l_max,
        flags=tuple(flags),
    )


# --------------------------------------------------------------------------
# closed forms
# --------------------------------------------------------------------------

def _ln_sinh_over(alpha: float) -> float:
    """log(sinh(alpha)/alpha), overflow-safe for large alpha."""
    if alpha < 350.0:
        return math.log(math.sinh(alpha) / alpha)
    return alpha - math.log(2.0) + math.log1p(-math.exp(-2.0 * alpha)) - math.log(alpha)


def weak1_aF(params: ShellParams) -> FreeEnergySample:
    """Order-lambda0 free energy (lambda0/(4 pi)) [log(sinh a/a) + a^2/18]."""
    a = params.alpha
    v = params.lambda0 / (4.0 * math.pi) * (_ln_sinh_over(a) + a * a / 18.0)
    return FreeEnergySample(params, "weak1", v, error_estimate=8e-16 * abs(v))


def lowT_closed_aF(params: ShellParams) -> FreeEnergySample:
    """(2 lambda0/3)^2 (1/pi) [xi^2/12 - log(xi) - Re psi(1 + i/xi)]."""
    xi = params.xi
    bracket = xi * xi / 12.0 - math.log(xi) - specfun.digamma_re_shifted(xi)
    pref = (2.0 * params.lambda0 / 3.0) ** 2 / math.pi
    v = pref * bracket
    return FreeEnergySample(params, "lowT_closed", v, error_estimate=1e-12 * (abs(v) + pref))


def lowT_integral_aF(params: ShellParams, form: str = "arctan",
                     config: QuadratureConfig | None = None) -> FreeEnergySample:
    """Low-temperature free energy from the reduced one-mode integral.

    form="arctan": keeps the bounded arctangent integrand; its branch jump
    at z = 1 is integrated with the same symmetric-window treatment as a
    true pole, purely for stability.  form="linearized": replaces the
    arctangent by its argument, leaving a simple pole at z = 1 handled as a
    principal value.
    """
    config = config or QuadratureConfig()
    if form not in LOWT_INTEGRAL_FORMS:
        raise ValueError(f"form must be one of {LOWT_INTEGRAL_FORMS}, got {form!r}")
    lam, alpha, xi = params.lambda0, params.alpha, params.xi
    pref = (2.0 * lam / 3.0) ** 2 / math.pi
    if form == "arctan":
        c = (2.0 / 3.0) * (alpha / xi) ** 3

        def f(z):
            zz = np.asarray(z, dtype=float)
            # factored pole keeps 1-z accurate arbitrarily close to z = 1
            with np.errstate(divide="ignore"):
                arg = c * zz**3 / ((1.0 - zz) * (1.0 + zz))
            return np.arctan(np.where(zz == 1.0, np.inf, arg))

        f.vectorized = True
        qr = pv_bose_integral(f, xi, [1.0], config)
        v = -pref * (3.0 * xi**3 / alpha**3) * qr.value
        err = pref * (3.0 * xi**3 / alpha**3) * qr.error_estimate
    else:
        def f(z):
            zz = np.asarray(z, dtype=float)
            with np.errstate(divide="ignore"):
                return zz**3 / ((1.0 - zz) * (1.0 + zz))

        f.vectorized = True
        qr = pv_bose_integral(f, xi, [1.0], config)
        v = -2.0 * pref * qr.value
        err = 2.0 * pref * qr.error_estimate
    flags = [] if qr.converged else ["unconverged"]
    if qr.degraded:
        flags.append("degraded_precision")
    return FreeEnergySample(params, "lowT_integral", v, error_estimate=err, flags=tuple(flags))


def strong_lowT_aF(t: float) -> FreeEnergySample:
    """Strong-coupling low-temperature law -(2/15) pi^3 t^4."""
    tf = float(t)
    if tf < 0:
        raise ValueError("t must be nonnegative")
    v = -(2.0 / 15.0) * math.pi**3 * tf**4
    params = ShellParams(lambda0=1.0, t=tf) if tf > 0 else None
    return FreeEnergySample(params, "strong_lowT", v, error_estimate=4e-16 * abs(v))


def weak_lowT_aF(params: ShellParams) -> FreeEnergySample:
    """Weak-coupling low-temperature law (2/9) lambda0 pi t^2."""
    v = (2.0 / 9.0) * params.lambda0 * math.pi * params.t**2
    return FreeEnergySample(params, "weak_lowT", v, error_estimate=4e-16 * abs(v))


def highT_aF(params: ShellParams) -> FreeEnergySample:
    """High-temperature law lambda0 pi t^2 / 18."""
    v = params.lambda0 * math.pi * params.t**2 / 18.0
    return FreeEnergySample(params, "highT", v, error_estimate=4e-16 * abs(v))


def highT_aS(params: ShellParams) -> float:
    """High-temperature entropy -lambda0 alpha / 18."""
    return -params.lambda0 * params.alpha / 18.0


def lowT_log_series(lambda0: float):
    """x^0, x^2, x^3 coefficients of log[x^2 - lambda0 f_H(1, x)] at small x."""
    lam = float(lambda0)
    if lam <= 0:
        raise ValueError("lambda0 must be positive")
    return (math.log(2.0 * lam / 3.0), 1.5 / lam + 0.7, -2.0 / 3.0)


# --------------------------------------------------------------------------
# entropy by differentiation
# --------------------------------------------------------------------------

def _aF_of_t(lambda0: float, t: float, method: str, config, form: str) -> FreeEnergySample:
    return compute_sample(ShellParams(lambda0, t), method, config=config, form=form)


def entropy(params: ShellParams, method: str = "exact", stencil_h: float | None = None,
            config: QuadratureConfig | None = None, form: str = "arctan") -> EntropySample:
    """a*S = -d(aF)/dt by five-point central differences with Richardson.

    The error estimate combines the disagreement between the h and h/2
    stencils with the propagated quadrature error estimates.
    """
    config = config or QuadratureConfig()
    t = params.t
    h = stencil_h if stencil_h is not None else max(1e-3, t / 20.0)
    if t - 2.0 * h <= 0:
        raise ValueError(f"stencil would cross t = 0 (t={t}, h={h})")

    def d_at(hh: float):
        s_m2 = _aF_of_t(params.lambda0, t - 2 * hh, method, config, form)
        s_m1 = _aF_of_t(params.lambda0, t - hh, method, config, form)
        s_p1 = _aF_of_t(params.lambda0, t + hh, method, config, form)
        s_p2 = _aF_of_t(params.lambda0, t + 2 * hh, method, config, form)
        d = (s_m2.aF - 8.0 * s_m1.aF + 8.0 * s_p1.aF - s_p2.aF) / (12.0 * hh)
        noise = (s_m2.error_estimate + 8 * s_m1.error_estimate
                 + 8 * s_p1.error_estimate + s_p2.error_estimate) / (12.0 * hh)
        flags = s_m2.flags + s_m1.flags + s_p1.flags + s_p2.flags
        return d, noise, flags

    d1, n1, f1 = d_at(h)
    d2, n2, f2 = d_at(h / 2.0)
    d = (16.0 * d2 - d1) / 15.0
    stencil_err = abs(d - d2)
    noise = (16.0 * n2 + n1) / 15.0
    flags = tuple(sorted(set(f1 + f2)))
    if noise > max(abs(d), 1e-300):
        flags = tuple(sorted(set(flags) | {"noise_exceeds_signal"}))
    return EntropySample(
        params=params,
        method=method,
        aS=-d,
        stencil_h=h,
        error_estimate=stencil_err + noise,
        flags=flags,
    )


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def compute_sample(params: ShellParams, method: str, config: QuadratureConfig | None = None,
                   form: str = "arctan") -> FreeEnergySample:
    """Evaluate one free-energy sample by method name."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    if method == "exact":
        return exact_aF(params, config)
    if method == "weak1":
        return weak1_aF(params)
    if method == "lowT_closed":
        return lowT_closed_aF(params)
    if method == "lowT_integral":
        return lowT_integral_aF(params, form=form, config=config)
    if method == "strong_lowT":
        s = strong_lowT_aF(params.t)
        return FreeEnergySample(params, "strong_lowT", s.aF, error_estimate=s.error_estimate)
    if method == "weak_lowT":
        return weak_lowT_aF(params)
    return highT_aF(params)
