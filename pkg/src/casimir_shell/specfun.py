"""Riccati-Bessel functions and the auxiliary functions of the TM phase.

All Bessel orders here are half-integer (nu = l + 1/2), which admits exact
evaluation by three-term ladders started from elementary seeds:

    s_l(x) = sqrt(pi x / 2) I_{l+1/2}(x)      (modified, regular)
    e_l(x) = sqrt(2 x / pi) K_{l+1/2}(x)      (modified, decaying)
    calJ_nu(x) = (nu - 1/2) J_nu(x) - x J_{nu-1}(x) = -sqrt(2x/pi) [x j_l(x)]'
    calY_nu(x) = (nu - 1/2) Y_nu(x) - x Y_{nu-1}(x) = -sqrt(2x/pi) [x y_l(x)]'

Stability dictates the ladder direction: downward (Miller) recursion with a
seed normalization for the regular families (s_l, and x j_l which feeds
calJ), upward recursion for the growing families (e_l, and x y_l which
feeds calY).  Ladder state is carried as (mantissa, base-2 exponent) pairs
so intermediate magnitudes far outside double range cannot overflow; only
the final requested value is folded back to a double.

Functions marked "degraded" hit the cancellation sentinel: the combination
they return lost more relative precision than `cancel_bound` allows.  The
caller (the phase module) decides whether to re-evaluate in wide-precision
arithmetic via the mpmath backend.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RangeError",
    "ModeIndex",
    "ComplexPoint",
    "riccati_s",
    "riccati_e",
    "riccati_s_prime",
    "riccati_e_prime",
    "f_H",
    "calJ",
    "calY",
    "f_H_imag_axis",
    "f_H_series",
    "digamma_re_shifted",
    "resolve_precision",
    "DEFAULT_CANCEL_BOUND",
    "DEFAULT_EXTENDED_DPS",
]

DEFAULT_CANCEL_BOUND = 1e-7
DEFAULT_EXTENDED_DPS = 30

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_LN2 = math.log(2.0)

# Env switch for globally forcing the wide-float backend.
PRECISION_ENV_VAR = "CASIMIR_SHELL_PRECISION"


class RangeError(ValueError):
    """A requested value is outside representable double range."""

    def __init__(self, name: str, l: int, x: float):
        self.name = name
        self.l = l
        self.x = x
        super().__init__(f"{name}(l={l}, x={x!r}) is outside double range")


def resolve_precision(explicit: str | None = None) -> str:
    """Effective precision mode: explicit argument wins, then the env var."""
    if explicit is not None:
        if explicit not in ("auto", "double", "extended"):
            raise ValueError(f"unknown precision mode {explicit!r}")
        return explicit
    env = os.environ.get(PRECISION_ENV_VAR, "").strip().lower()
    return "extended" if env == "extended" else "auto"


@dataclass(frozen=True)
class ModeIndex:
    """Angular momentum index of a TM mode; the physical tower starts at l = 1."""

    l: int

    def __post_init__(self):
        if not isinstance(self.l, (int, np.integer)) or self.l < 1:
            raise ValueError(f"mode index must be an integer >= 1, got {self.l!r}")

    @property
    def nu(self) -> float:
        return self.l + 0.5


@dataclass(frozen=True)
class ComplexPoint:
    """Real/imaginary decomposition of -x^2 - lambda0 * f_H(l, ix)."""

    re: float
    im: float

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise ValueError(f"non-finite complex point ({self.re!r}, {self.im!r})")


def _as_l(l) -> int:
    """Accept a ModeIndex or a plain integer (l = 0 allowed internally)."""
    if isinstance(l, ModeIndex):
        return l.l
    li = int(l)
    if li != l or li < 0:
        raise ValueError(f"l must be a nonnegative integer, got {l!r}")
    return li


def _check_x(x) -> float:
    xf = float(x)
    if not (xf > 0.0) or not math.isfinite(xf):
        raise ValueError(f"x must be positive and finite, got {x!r}")
    return xf


# ---------------------------------------------------------------------------
# (mantissa, exponent) pair arithmetic over numpy arrays
# ---------------------------------------------------------------------------

def _pair(v):
    m, e = np.frexp(v)
    return m, e.astype(np.int64)


def _pair_scale(m, e, factor):
    m2, de = np.frexp(m * factor)
    return m2, e + de


def _pair_to_float(m, e):
    with np.errstate(over="ignore", under="ignore"):
        return np.ldexp(m, np.clip(e, -2400, 2400))


def _exp_pair(x):
    """exp(x) as a pair, valid for any |x| (vectorized)."""
    t = np.asarray(x, dtype=float) / _LN2
    ei = np.floor(t)
    m = np.exp2(t - ei) * 0.5
    return m, ei.astype(np.int64) + 1


def _sinh_pair(x):
    """sinh(x) as a pair for x > 0 without overflow."""
    x = np.asarray(x, dtype=float)
    small = x < 350.0
    ms, es = _pair(np.sinh(np.where(small, x, 1.0)))
    mb, eb = _exp_pair(np.where(small, 1.0, x))
    mb *= 0.5 * (1.0 - np.exp(-2.0 * np.where(small, 1.0, x)))
    mb, db = np.frexp(mb)
    return np.where(small, ms, mb), np.where(small, es, eb + db.astype(np.int64))


# ---------------------------------------------------------------------------
# Ladders.  All return rows l = 0..L as (mant (L+1, n), exp (L+1, n)) pairs.
# ---------------------------------------------------------------------------

def _ladder_down(x, L, modified: bool):
    """Downward Miller ladder for S_l = x j_l(x) (or s_l when modified).

    The trial seed is injected at a per-column start order, so each column's
    values are bit-identical no matter which other abscissae share the batch.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    # per-column start order for the trial solution
    base = np.maximum(L, np.ceil(x)).astype(np.int64)
    m_start = base + np.ceil(2.0 * np.sqrt(np.maximum(base, 4.0))).astype(np.int64) + 26
    M = int(m_start.max())
    inv = 1.0 / x
    mS = np.empty((L + 1, n))
    eS = np.empty((L + 1, n), dtype=np.int64)
    m_hi = np.zeros(n)
    e_hi = np.zeros(n, dtype=np.int64)
    m_lo = np.full(n, 0.5)
    e_lo = np.zeros(n, dtype=np.int64)
    sign = 1.0 if modified else -1.0
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        for l in range(M, -1, -1):
            seed = m_start == l
            if seed.any():
                m_lo[seed] = 0.5
                e_lo[seed] = 0
                m_hi[seed] = 0.0
                e_hi[seed] = 0
            if l <= L:
                mS[l] = m_lo
                eS[l] = e_lo
            if l == 0:
                break
            c = (2 * l + 1) * inv
            v = c * m_lo + sign * np.ldexp(m_hi, e_hi - e_lo)
            m_new, de = np.frexp(v)
            m_hi, e_hi = m_lo, e_lo
            m_lo, e_lo = m_new, e_lo + de.astype(np.int64)

    if modified:
        seed_m, seed_e = _sinh_pair(x)
        sm = seed_m / mS[0]
        sm, de = np.frexp(sm)
        sig_e = seed_e - eS[0] + de.astype(np.int64)
    else:
        s0 = np.sin(x)
        s1 = np.sin(x) * inv - np.cos(x)
        # sin x is relatively accurate when not suppressed against its own
        # scale min(x, 1); the S_1 seed cancels catastrophically at small x
        use0 = np.abs(s0) >= 0.1 * np.minimum(x, 1.0)
        seed = np.where(use0, s0, s1)
        ref_m = np.where(use0, mS[0], mS[min(1, L)])
        ref_e = np.where(use0, eS[0], eS[min(1, L)])
        sm = seed / ref_m
        sm, de = np.frexp(sm)
        sig_e = de.astype(np.int64) - ref_e

    mS = mS * sm
    mS, de = np.frexp(mS)
    eS = eS + sig_e + de.astype(np.int64)
    return mS, eS


def _ladder_up(x, L, modified: bool):
    """Upward ladder for T_l = x y_l(x) (or e_l when modified)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    inv = 1.0 / x
    mT = np.empty((max(L, 1) + 1, n))
    eT = np.empty((max(L, 1) + 1, n), dtype=np.int64)
    if modified:
        m0, e0 = _exp_pair(-x)
        m1, de = np.frexp(m0 * (1.0 + inv))
        e1 = e0 + de.astype(np.int64)
        sign = 1.0
    else:
        m0, e0 = _pair(-np.cos(x))
        m1, e1 = _pair(-(np.cos(x) * inv + np.sin(x)))
        sign = -1.0
    mT[0], eT[0] = m0, e0
    mT[1], eT[1] = m1, e1
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        for l in range(1, L):
            c = (2 * l + 1) * inv
            v = c * mT[l] + sign * np.ldexp(mT[l - 1], eT[l - 1] - eT[l])
            m_new, de = np.frexp(v)
            mT[l + 1] = m_new
            eT[l + 1] = eT[l] + de.astype(np.int64)
    return mT, eT


def _derivative_pair(m_rows, e_rows, l, x, cancel_bound):
    """[row_{l}]' = row_{l-1} - (l/x) row_l as a pair, plus a cancellation mask.

    Valid for l >= 1; the prime is d/dx of the Riccati form whose rows are
    supplied (x j_l, x y_l, s_l with sign +, e_l handled by caller).
    """
    with np.errstate(over="ignore", under="ignore"):
        a = np.ldexp(m_rows[l - 1], e_rows[l - 1] - e_rows[l])
    b = (l / x) * m_rows[l]
    v = a - b
    degraded = np.abs(v) < cancel_bound * (np.abs(a) + np.abs(b))
    m, de = np.frexp(v)
    return m, e_rows[l] + de.astype(np.int64), degraded


# ---------------------------------------------------------------------------
# Vector evaluation of the phase ingredients (used by the phase module)
# ---------------------------------------------------------------------------

def phase_parts_rows(x, lambda0: float, L: int, cancel_bound: float = DEFAULT_CANCEL_BOUND):
    """Real and imaginary parts of -x^2 - lambda0 f_H(l, ix) for l = 1..L.

    Parameters
    ----------
    x : array of positive abscissae, shape (n,)
    lambda0 : coupling, >= 0
    L : highest angular momentum row

    Returns
    -------
    re, im : arrays of shape (L, n); row k holds l = k + 1
    degraded : bool array (L, n), cancellation sentinel per entry
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0):
        raise ValueError("phase abscissae must be positive")
    L = max(int(L), 1)
    mS, eS = _ladder_down(x, L, modified=False)
    mY, eY = _ladder_up(x, L, modified=False)
    pref = _SQRT_2_OVER_PI * np.sqrt(x)
    lam_half_pi = lambda0 * (math.pi / 2.0)
    x2 = x * x
    re = np.empty((L, x.size))
    im = np.empty((L, x.size))
    degraded = np.zeros((L, x.size), dtype=bool)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        for l in range(1, L + 1):
            mJ, eJ, dJ = _derivative_pair(mS, eS, l, x, cancel_bound)
            mYp, eYp, dY = _derivative_pair(mY, eY, l, x, cancel_bound)
            # calJ = -pref * S'_l ; calY = -pref * Y'_l ; signs cancel in products
            p_mant = lam_half_pi * (pref * mJ) * (pref * mYp)
            p = np.ldexp(p_mant, eJ + eYp)
            i_mant = lam_half_pi * (pref * mJ) ** 2
            im[l - 1] = np.ldexp(i_mant, 2 * eJ)
            rrow = -x2 + p
            re[l - 1] = rrow
            degraded[l - 1] = dJ | dY | (np.abs(rrow) < cancel_bound * (x2 + np.abs(p)))
    return re, im, degraded


def real_part_rows(x, lambda0: float, L: int):
    """Only the real part rows of -x^2 - lambda0 f_H(l, ix) (zero search)."""
    re, _, _ = phase_parts_rows(x, lambda0, L)
    return re


# ---------------------------------------------------------------------------
# Scalar operations (public contract)
# ---------------------------------------------------------------------------

def _scalar_from_pair(name, l, x, m, e):
    v = float(_pair_to_float(np.asarray([m]), np.asarray([e]))[0])
    if not math.isfinite(v):
        raise RangeError(name, l, x)
    return v


def riccati_s(l, x) -> float:
    """Modified Riccati-Bessel s_l(x) = sqrt(pi x/2) I_{l+1/2}(x)."""
    li = _as_l(l)
    xf = _check_x(x)
    if li == 0:
        v = _sinh_pair(np.asarray([xf]))
        return _scalar_from_pair("riccati_s", li, xf, v[0][0], v[1][0])
    mS, eS = _ladder_down(np.asarray([xf]), li, modified=True)
    return _scalar_from_pair("riccati_s", li, xf, mS[li][0], eS[li][0])


def riccati_e(l, x) -> float:
    """Modified Riccati-Bessel e_l(x) = sqrt(2 x/pi) K_{l+1/2}(x).

    Underflow to zero is allowed for large x; overflow (small x, large l)
    raises RangeError.
    """
    li = _as_l(l)
    xf = _check_x(x)
    mT, eT = _ladder_up(np.asarray([xf]), max(li, 1), modified=True)
    with np.errstate(over="ignore", under="ignore"):
        v = float(np.ldexp(mT[li][0], min(int(eT[li][0]), 2400)))
    if math.isinf(v):
        raise RangeError("riccati_e", li, xf)
    return v


def riccati_s_prime(l, x) -> float:
    """d/dx of s_l, via s_l'(x) = s_{l-1}(x) - (l/x) s_l(x)."""
    li = _as_l(l)
    xf = _check_x(x)
    if li == 0:
        return math.cosh(xf) if xf < 710 else _raise_range("riccati_s_prime", li, xf)
    xa = np.asarray([xf])
    mS, eS = _ladder_down(xa, li, modified=True)
    m, e, _ = _derivative_pair(mS, eS, li, xa, 0.0)
    return _scalar_from_pair("riccati_s_prime", li, xf, m[0], e[0])


def _raise_range(name, l, x):
    raise RangeError(name, l, x)


def riccati_e_prime(l, x) -> float:
    """d/dx of e_l, via e_l'(x) = -e_{l-1}(x) - (l/x) e_l(x)."""
    li = _as_l(l)
    xf = _check_x(x)
    xa = np.asarray([xf])
    if li == 0:
        m, e = _exp_pair(np.asarray([-xf]))
        with np.errstate(under="ignore"):
            return -float(np.ldexp(m[0], max(int(e[0]), -2400)))
    mT, eT = _ladder_up(xa, li, modified=True)
    shift = np.clip(eT[li - 1] - eT[li], -2400, 2400)
    with np.errstate(over="ignore", under="ignore"):
        v = -(np.ldexp(mT[li - 1], shift) + (li / xa) * mT[li])
    m, de = np.frexp(v)
    return _scalar_from_pair("riccati_e_prime", li, xf, m[0], eT[li][0] + int(de[0]))


def f_H(l, x) -> float:
    """x e_l'(x) s_l'(x), the TM shell response on the imaginary frequency axis."""
    li = _as_l(l)
    xf = _check_x(x)
    if li == 0:
        return -xf * math.cosh(xf) * math.exp(-xf) if xf < 700 else -xf / 2.0
    xa = np.asarray([xf])
    mS, eS = _ladder_down(xa, li, modified=True)
    msp, esp, _ = _derivative_pair(mS, eS, li, xa, 0.0)
    mT, eT = _ladder_up(xa, li, modified=True)
    shift = np.clip(eT[li - 1] - eT[li], -2400, 2400)
    with np.errstate(over="ignore", under="ignore"):
        vep = -(np.ldexp(mT[li - 1], shift) + (li / xa) * mT[li])
    mep, dep = np.frexp(vep)
    eep = eT[li] + dep.astype(np.int64)
    mant = xf * msp[0] * mep[0]
    v = float(_pair_to_float(np.asarray([mant]), np.asarray([esp[0] + eep[0]]))[0])
    if not math.isfinite(v):
        raise RangeError("f_H", li, xf)
    return v


def _nu_to_l(nu) -> int:
    l = int(round(float(nu) - 0.5))
    if abs(nu - (l + 0.5)) > 1e-12 or l < 1:
        raise ValueError(f"nu must be l + 1/2 with l >= 1, got {nu!r}")
    return l


def calJ(nu, x, *, report_precision: bool = False,
         cancel_bound: float = DEFAULT_CANCEL_BOUND):
    """(nu-1/2) J_nu(x) - x J_{nu-1}(x) = -sqrt(2x/pi) [x j_l(x)]'.

    With report_precision=True returns (value, degraded) where `degraded`
    is the loss-of-precision sentinel: the recurrence combination cancelled
    more than `cancel_bound` of its operands' magnitude.
    """
    l = _nu_to_l(nu)
    xf = _check_x(x)
    xa = np.asarray([xf])
    mS, eS = _ladder_down(xa, l, modified=False)
    m, e, degraded = _derivative_pair(mS, eS, l, xa, cancel_bound)
    pref = -_SQRT_2_OVER_PI * math.sqrt(xf)
    m2, de = np.frexp(pref * m)
    v = _scalar_from_pair("calJ", l, xf, m2[0], e[0] + int(de[0]))
    return (v, bool(degraded[0])) if report_precision else v


def calY(nu, x, *, report_precision: bool = False,
         cancel_bound: float = DEFAULT_CANCEL_BOUND):
    """(nu-1/2) Y_nu(x) - x Y_{nu-1}(x) = -sqrt(2x/pi) [x y_l(x)]'."""
    l = _nu_to_l(nu)
    xf = _check_x(x)
    xa = np.asarray([xf])
    mY, eY = _ladder_up(xa, l, modified=False)
    m, e, degraded = _derivative_pair(mY, eY, l, xa, cancel_bound)
    pref = -_SQRT_2_OVER_PI * math.sqrt(xf)
    m2, de = np.frexp(pref * m)
    v = _scalar_from_pair("calY", l, xf, m2[0], e[0] + int(de[0]))
    return (v, bool(degraded[0])) if report_precision else v


def f_H_imag_axis(l, x, lambda0, *, report_precision: bool = False):
    """Value of -x^2 - lambda0 f_H(l, ix) as (re, im).

    re = -x^2 + lambda0 (pi/2) calJ calY,  im = lambda0 (pi/2) calJ^2 >= 0.
    With report_precision=True the calJ/calY sentinel is propagated as a
    second return value.
    """
    li = _as_l(l)
    if li < 1:
        raise ValueError("f_H_imag_axis needs l >= 1")
    xf = _check_x(x)
    lam = float(lambda0)
    if lam < 0:
        raise ValueError("lambda0 must be nonnegative")
    if lam == 0.0:
        p = ComplexPoint(re=-xf * xf, im=0.0)
        return (p, False) if report_precision else p
    re, im, degraded = phase_parts_rows(np.asarray([xf]), lam, li)
    p = ComplexPoint(re=float(re[li - 1][0]), im=float(im[li - 1][0]))
    return (p, bool(degraded[li - 1][0])) if report_precision else p


def f_H_series(l, order: int | None = None):
    """Leading small-x expansion coefficients of f_H(l, x).

    Returns a list of (power, coefficient) pairs: the constant term, the x^2
    term, and the first odd term x^{2l+1}.  The unknown O(x^4) correction
    (and the O(x^2) correction inside the odd-term bracket) are not exposed.
    """
    li = _as_l(l)
    if li < 1:
        raise ValueError("series defined for l >= 1")
    c0 = -li * (li + 1) / (2 * li + 1)
    c2 = -(3 + 2 * li * (li + 1)) / ((4 * li * li - 1) * (2 * li + 3))
    codd = -((-1) ** li) * 2.0 ** (-2 * (li + 1)) * (li + 1) ** 2 * math.pi / math.gamma(li + 1.5) ** 2
    coeffs = [(0, c0), (2, c2), (2 * li + 1, codd)]
    if order is not None:
        if order < 0:
            raise ValueError("order must be nonnegative")
        coeffs = [(p, c) for (p, c) in coeffs if p <= order]
    return coeffs


def f_H_series_eval(l, x) -> float:
    """Evaluate the truncated small-x series of f_H at x."""
    return sum(c * float(x) ** p for p, c in f_H_series(l))


def digamma_re_shifted(xi) -> float:
    """Re psi(1 + i/xi) for xi > 0.

    Series form -euler_gamma + sum_k 1/(k (k^2 xi^2 + 1)), summed explicitly
    to k < K and closed with an Euler-Maclaurin tail at K.
    """
    x = float(xi)
    if not (x > 0.0):
        raise ValueError(f"xi must be positive, got {xi!r}")
    c = x * x
    K = 64
    k = np.arange(1, K)
    s = float(np.sum(1.0 / (k * (c * k * k + 1.0))))

    def g(kk):
        return 1.0 / (kk * (c * kk * kk + 1.0))

    def gp(kk):
        q = c * kk * kk + 1.0
        return -1.0 / kk**2 - c * (1.0 - c * kk * kk) / q**2

    def gppp(kk):
        q = c * kk * kk + 1.0
        return -6.0 / kk**4 + 6.0 * c * c * (1.0 - 6.0 * c * kk * kk + c * c * kk**4) / q**4

    integral = 0.5 * math.log1p(1.0 / (c * K * K))
    tail = integral + 0.5 * g(K) - gp(K) / 12.0 + gppp(K) / 720.0
    return -np.euler_gamma + s + tail


# ---------------------------------------------------------------------------
# Wide-precision backend (mpmath); scalar, used on sentinel escalation
# ---------------------------------------------------------------------------

def phase_parts_mp(l: int, x: float, lambda0: float, dps: int = DEFAULT_EXTENDED_DPS):
    """(re, im) of -x^2 - lambda0 f_H(l, ix), evaluated in mpmath ladders."""
    import mpmath as mp

    with mp.workdps(dps):
        xm = mp.mpf(x)
        S, Sm1 = _mp_xjl(l, xm)
        Y, Ym1 = _mp_xyl(l, xm)
        pref = mp.sqrt(2 * xm / mp.pi)
        jc = -pref * (Sm1 - l / xm * S)
        yc = -pref * (Ym1 - l / xm * Y)
        lam = mp.mpf(lambda0)
        re = -xm * xm + lam * mp.pi / 2 * jc * yc
        im = lam * mp.pi / 2 * jc * jc
        return float(re), float(im)


def _mp_xjl(l: int, x):
    """x j_l(x) and x j_{l-1}(x) by downward recursion in mpmath."""
    import mpmath as mp

    M = max(l, int(mp.ceil(x))) + int(2 * math.sqrt(max(l, float(x), 4.0))) + 30
    hi = mp.mpf(0)
    lo = mp.mpf(1)
    row_l = row_lm1 = None
    for k in range(M, -1, -1):
        if k == l:
            row_l = lo
        if k == l - 1:
            row_lm1 = lo
        if k == 0:
            break
        hi, lo = lo, (2 * k + 1) / x * lo - hi
    s0 = mp.sin(x)
    if abs(s0) >= mp.mpf("0.1") * min(x, mp.mpf(1)):
        sigma = s0 / lo
    else:
        sigma = (mp.sin(x) / x - mp.cos(x)) / hi  # normalize by S_1
    return row_l * sigma, row_lm1 * sigma


def _mp_xyl(l: int, x):
    """x y_l(x) and x y_{l-1}(x) by upward recursion in mpmath."""
    import mpmath as mp

    t0 = -mp.cos(x)
    t1 = -mp.cos(x) / x - mp.sin(x)
    if l == 1:
        return t1, t0
    prev, cur = t0, t1
    for k in range(1, l):
        prev, cur = cur, (2 * k + 1) / x * cur - prev
    return cur, prev
