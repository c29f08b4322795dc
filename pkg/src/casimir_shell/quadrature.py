"""Bose-weighted semi-infinite quadrature with breakpoints and principal values.

The panel rule is an embedded Gauss pair (G7 inside G15 in the error sense:
value from the 15-point rule, error from the difference).  All nodes are
interior, so panel edges may sit exactly on phase jumps.  Panels are split
at every supplied breakpoint and at a forced pi/2 grid so that no panel
spans more than half an oscillation quasi-period of the integrand.

Principal values use symmetric excision: the window around each pole is
integrated as the paired integrand g(p+u) + g(p-u), which is smooth, over a
geometrically shrinking sequence of half-widths; the finite-width results
are extrapolated to zero half-width.

Accumulation is an ordered pairwise reduction, so results are bit-stable
regardless of how the caller distributes work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "QuadratureConfig",
    "QuadratureResult",
    "ModeSumResult",
    "QuadratureError",
    "PoleSeparationError",
    "bose_integral",
    "pv_bose_integral",
    "mode_sum",
    "pairwise_sum",
]


class QuadratureError(RuntimeError):
    pass


class PoleSeparationError(QuadratureError):
    pass


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-14
    tail_cut_weight: float = 1e-18
    pv_eps0: float = 1e-2
    pv_eps_factor: float = 0.5
    pv_levels: int = 44
    pv_min_eps: float = 1e-13
    max_subdivisions: int = 5000
    l_hard_cap: int = 4000
    precision: str | None = None
    cancel_bound: float = 1e-7

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not (0 < self.pv_eps_factor < 1):
            raise ValueError("pv_eps_factor must shrink the excision sequence")

    def target(self, value: float) -> float:
        return max(self.rel_tol * abs(value), self.abs_tol)


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    n_evals: int
    breakpoints_used: tuple[float, ...] = ()
    pv_points: tuple[float, ...] = ()
    pv_history: tuple[tuple[float, float], ...] = ()
    converged: bool = True
    degraded: bool = False


@dataclass(frozen=True)
class ModeSumResult:
    value: float
    l_max: int
    converged: bool
    n_terms: int


def pairwise_sum(values) -> float:
    """Deterministic pairwise reduction of an ordered sequence."""
    vals = list(values)
    if not vals:
        return 0.0
    while len(vals) > 1:
        nxt = [vals[i] + vals[i + 1] for i in range(0, len(vals) - 1, 2)]
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return float(vals[0])


# --------------------------------------------------------------------------
# panel engine
# --------------------------------------------------------------------------

_G7 = np.polynomial.legendre.leggauss(7)
_G15 = np.polynomial.legendre.leggauss(15)
_NODES = np.concatenate([_G15[0], _G7[0]])  # 22 abscissae per panel


def _call_integrand(f, xs: np.ndarray):
    """Evaluate integrand; honor a vectorized fast path and degraded flags."""
    if getattr(f, "vectorized", False):
        out = f(xs)
        if isinstance(out, tuple):
            return np.asarray(out[0], dtype=float), bool(np.any(out[1]))
        return np.asarray(out, dtype=float), False
    vals = np.empty(xs.size)
    degraded = False
    for i, xv in enumerate(xs):
        out = f(float(xv))
        if isinstance(out, tuple):
            vals[i] = out[0]
            degraded |= bool(out[1])
        else:
            vals[i] = out
    return vals, degraded


def _eval_panels(g, panels):
    """G15 value and |G15-G7| error for each (a, b) panel, one integrand call."""
    k = len(panels)
    xs = np.empty(k * 22)
    for i, (a, b) in enumerate(panels):
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        xs[i * 22:(i + 1) * 22] = mid + half * _NODES
    ys, degraded = _call_integrand(g, xs)
    if not np.all(np.isfinite(ys)):
        bad = xs[~np.isfinite(ys)][0]
        raise QuadratureError(f"integrand returned a non-finite value at x={bad!r}")
    vals = np.empty(k)
    errs = np.empty(k)
    for i, (a, b) in enumerate(panels):
        half = 0.5 * (b - a)
        y = ys[i * 22:(i + 1) * 22]
        v15 = half * float(np.dot(_G15[1], y[:15]))
        v7 = half * float(np.dot(_G7[1], y[15:]))
        vals[i] = v15
        errs[i] = abs(v15 - v7)
    return vals, errs, k * 22, degraded


def _min_width(a: float, b: float) -> float:
    return 50.0 * np.finfo(float).eps * max(1.0, abs(a), abs(b))


def _adaptive(g, segments, config: QuadratureConfig, abs_floor: float = 0.0):
    """Globally adaptive bisection over a list of disjoint (a, b) segments.

    `abs_floor` relaxes the absolute tolerance: sub-integrals that are tiny
    pieces of a larger whole should not chase a relative target of their own.
    """
    panels = [(a, b) for a, b in segments if b > a]
    vals, errs, n_evals, degraded = _eval_panels(g, panels)
    store = {p: (vals[i], errs[i]) for i, p in enumerate(panels)}
    splits = 0
    while True:
        ordered = sorted(store)
        total = pairwise_sum(store[p][0] for p in ordered)
        toterr = pairwise_sum(store[p][1] for p in ordered)
        target = max(config.target(total), abs_floor)
        if toterr <= target:
            return total, toterr, n_evals, True, degraded
        thresh = target / max(len(store), 1)
        worst = max(store, key=lambda p: store[p][1])
        to_split = [p for p in store
                    if store[p][1] > thresh and (p[1] - p[0]) > _min_width(*p)]
        if worst not in to_split and (worst[1] - worst[0]) > _min_width(*worst):
            to_split.append(worst)
        to_split = sorted(to_split)[: max(1, config.max_subdivisions - splits)]
        if not to_split or splits >= config.max_subdivisions:
            return total, toterr, n_evals, False, degraded
        children = []
        for a, b in to_split:
            del store[(a, b)]
            m = 0.5 * (a + b)
            children.extend([(a, m), (m, b)])
        splits += len(to_split)
        vals, errs, used, degr = _eval_panels(g, children)
        n_evals += used
        degraded |= degr
        for i, p in enumerate(children):
            store[p] = (vals[i], errs[i])


def _bose_weight(alpha: float):
    c = 2.0 * math.pi / alpha

    def w(x):
        arg = c * np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return np.where(arg > 700.0, np.exp(-arg), 1.0 / np.expm1(np.where(arg > 700.0, 1.0, arg)))

    return w


def _weighted(f, alpha: float):
    w = _bose_weight(alpha)
    if getattr(f, "vectorized", False):
        def g(xs):
            out = f(xs)
            if isinstance(out, tuple):
                return out[0] * w(xs), out[1]
            return out * w(xs)
        g.vectorized = True
        return g

    def g(x):
        out = f(x)
        if isinstance(out, tuple):
            return out[0] * float(w(x)), out[1]
        return out * float(w(x))

    return g


def _edges(x_max: float, breakpoints, extra=()):
    pts = {0.0, x_max}
    half_pi = math.pi / 2.0
    pts.update(np.arange(half_pi, x_max, half_pi).tolist())
    for b in list(breakpoints) + list(extra):
        if 0.0 < b < x_max:
            pts.add(float(b))
    edges = sorted(pts)
    # merge points closer than resolvable width
    out = [edges[0]]
    for e in edges[1:]:
        if e - out[-1] > _min_width(out[-1], e):
            out.append(e)
    if out[-1] != x_max:
        out[-1] = x_max
    return out


def _cutoff(alpha: float, tail_cut_weight: float) -> float:
    x_raw = alpha * math.log(1.0 / tail_cut_weight) / (2.0 * math.pi)
    half_pi = math.pi / 2.0
    return math.ceil(x_raw / half_pi) * half_pi


def bose_integral(f, alpha: float, breakpoints=(), config: QuadratureConfig | None = None) -> QuadratureResult:
    """integral_0^inf f(x) / (e^{2 pi x / alpha} - 1) dx.

    The integrand must vanish at the origin (the phase sum does, like x^3);
    panels split at every breakpoint; the exponential tail is cut where the
    weight falls below `tail_cut_weight` and the remainder is added to the
    error budget.
    """
    config = config or QuadratureConfig()
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    x_max = _cutoff(alpha, config.tail_cut_weight)
    edges = _edges(x_max, breakpoints)
    g = _weighted(f, alpha)
    segments = list(zip(edges[:-1], edges[1:]))
    total, toterr, n_evals, converged, degraded = _adaptive(g, segments, config)
    ftail, _ = _call_integrand(f, np.asarray([x_max]))
    tail_est = abs(float(ftail[0])) * (alpha / (2.0 * math.pi)) * config.tail_cut_weight
    toterr += tail_est
    n_evals += 1
    if converged:
        converged = toterr <= config.target(total)
    return QuadratureResult(
        value=total,
        error_estimate=toterr,
        n_evals=n_evals,
        breakpoints_used=tuple(edges),
        pv_points=(),
        converged=converged,
        degraded=degraded,
    )


# --------------------------------------------------------------------------
# principal values
# --------------------------------------------------------------------------

def _paired(g, p: float):
    # Snap u so that p+u and p-u are exact mirror images in floating point;
    # otherwise the two sides round on different grids and the pole parts of
    # the pair no longer cancel (noise ~ residue * ulp / u^2).
    def q(u):
        us = (p + u) - p
        return g(p + us) + g(p - us)

    if getattr(g, "vectorized", False):
        def qv(us):
            us = (p + np.asarray(us, dtype=float)) - p
            hi = g(p + us)
            lo = g(p - us)
            if isinstance(hi, tuple):
                return hi[0] + lo[0], hi[1] | lo[1]
            return hi + lo
        qv.vectorized = True
        return qv
    return q


def _neville(xs, ys):
    """Polynomial extrapolation of (xs, ys) to 0."""
    n = len(xs)
    t = list(ys)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            t[i] = t[i] + (t[i] - t[i - 1]) * xs[i] / (xs[i - j] - xs[i])
    return t[-1]


def pv_bose_integral(f, alpha: float, poles, config: QuadratureConfig | None = None) -> QuadratureResult:
    """Principal value of integral_0^inf f(x)/(e^{2 pi x/alpha}-1) dx.

    `poles` lists simple poles of f strictly inside (0, inf).  Symmetric
    excision windows are refined geometrically (half-widths eps0 * factor^k)
    and the finite-width values are extrapolated to zero half-width; the
    reported error covers the distance between the extrapolation and the
    last two finite-width results.
    """
    config = config or QuadratureConfig()
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    poles = sorted(float(p) for p in poles)
    if not poles:
        return bose_integral(f, alpha, (), config)
    if any(p <= 0 for p in poles):
        raise ValueError("poles must be strictly positive")
    x_max = _cutoff(alpha, config.tail_cut_weight)
    poles = [p for p in poles if p < x_max]
    if not poles:
        return bose_integral(f, alpha, (), config)

    eps0 = config.pv_eps0
    gaps = [poles[0]] + [0.5 * (b - a) for a, b in zip(poles, poles[1:])] + [x_max - poles[-1]]
    min_gap = min(gaps)
    while eps0 * 2.0 >= min_gap:
        eps0 *= config.pv_eps_factor
        if eps0 < config.pv_min_eps:
            raise PoleSeparationError(f"poles too close to separate: {poles}")

    g = _weighted(f, alpha)
    edges = _edges(x_max, [], extra=[p + s * eps0 for p in poles for s in (-1.0, 1.0)])
    segments = []
    holes = [(p - eps0, p + eps0) for p in poles]
    pts = sorted(set(edges) | {h for hole in holes for h in hole})
    cur = pts[0]
    for nxt in pts[1:]:
        mid = 0.5 * (cur + nxt)
        if not any(lo < mid < hi for lo, hi in holes):
            segments.append((cur, nxt))
        cur = nxt
    # inner pieces run tighter so the excision-limit error dominates the budget
    inner = replace(config, rel_tol=config.rel_tol / 4.0, abs_tol=config.abs_tol / 4.0)
    base, base_err, n_evals, conv, degraded = _adaptive(g, segments, inner)

    eps_seq = [eps0]
    i_seq = [base]
    err_seq = [base_err]
    pv_hat = base
    stable_err = math.inf
    eps = eps0
    ring_floor = max(config.abs_tol, 0.005 * config.target(base))
    for _ in range(config.pv_levels):
        new_eps = eps * config.pv_eps_factor
        if new_eps < config.pv_min_eps:
            break
        ring_val = 0.0
        ring_err = 0.0
        for p in poles:
            q = _paired(g, p)
            v, e, used, cflag, dflag = _adaptive(q, [(new_eps, eps)], inner, abs_floor=ring_floor)
            ring_val += v
            ring_err += e
            n_evals += used
            conv &= cflag
            degraded |= dflag
        i_seq.append(i_seq[-1] + ring_val)
        err_seq.append(err_seq[-1] + ring_err)
        eps_seq.append(new_eps)
        eps = new_eps
        k = min(5, len(eps_seq))
        pv_hat = _neville(eps_seq[-k:], i_seq[-k:])
        dist = max(abs(pv_hat - i_seq[-1]), abs(pv_hat - i_seq[-2]))
        stable_err = 1.25 * dist
        if stable_err + err_seq[-1] <= config.target(pv_hat):
            break

    err = err_seq[-1] + (stable_err if math.isfinite(stable_err) else abs(pv_hat - base))
    converged = conv and err <= config.target(pv_hat)
    return QuadratureResult(
        value=pv_hat,
        error_estimate=err,
        n_evals=n_evals,
        breakpoints_used=tuple(pts),
        pv_points=tuple(poles),
        pv_history=tuple(zip(eps_seq, i_seq)),
        converged=converged,
        degraded=degraded,
    )


# --------------------------------------------------------------------------
# mode sums
# --------------------------------------------------------------------------

def mode_sum(term, config: QuadratureConfig | None = None, *, l_min_floor: int = 10) -> ModeSumResult:
    """sum_{l>=1} (2l+1) term(l), truncated by a geometric tail bound.

    At least `l_min_floor` terms are always taken (the tower oscillates
    before the exponential decay sets in); a hard cap flags non-convergence
    instead of returning a bare number.
    """
    config = config or QuadratureConfig()
    total = 0.0
    hist: list[float] = []
    l = 0
    l_max = 0
    while l < config.l_hard_cap:
        l += 1
        tl = (2 * l + 1) * float(term(l))
        total += tl
        hist.append(abs(tl))
        l_max = l
        if l < max(l_min_floor, 3):
            continue
        a2, a1, a0 = hist[-3], hist[-2], hist[-1]
        if a0 == 0.0 and a1 == 0.0:
            return ModeSumResult(total, l_max, True, l)
        if a0 < a1 < a2:
            r = max(a0 / a1, a1 / a2)
            if r < 1.0:
                tail = a0 * r / (1.0 - r)
                if tail <= max(config.rel_tol * abs(total), config.abs_tol):
                    return ModeSumResult(total, l_max, True, l)
    return ModeSumResult(total, l_max, False, l_max)
