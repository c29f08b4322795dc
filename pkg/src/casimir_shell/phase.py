"""Mode phase arg[-x^2 - lambda0 f_H(l, ix)] and its discontinuity structure.

The branch is the plain arctangent of im/re restricted to (-pi/2, pi/2],
with re = 0 mapped to +pi/2.  No unwinding is ever applied: the phase jumps
by pi wherever the real part crosses zero, and those crossings are exactly
the breakpoints the quadrature needs.  Oddness of the arctangent around the
origin is what makes the zero-temperature limit of the free energy exist,
so a continuous branch would be wrong, not merely different.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .specfun import DEFAULT_CANCEL_BOUND, DEFAULT_EXTENDED_DPS, ComplexPoint, ModeIndex

__all__ = [
    "ModePhaseTerm",
    "SingularitySet",
    "MeshResolutionError",
    "arg_branch",
    "mode_phase",
    "find_denominator_zeros",
    "phase_sum_batch",
    "collect_breakpoints",
]

_HALF_PI = math.pi / 2.0


class MeshResolutionError(RuntimeError):
    """The sign-scan mesh could not separate zeros inside one cell."""

    def __init__(self, l: int, cell: tuple[float, float]):
        self.l = l
        self.cell = cell
        super().__init__(f"unresolved sign structure for l={l} in cell {cell}")


@dataclass(frozen=True)
class ModePhaseTerm:
    """One (l, x) phase evaluation with its real/imaginary decomposition."""

    l: int
    x: float
    value: float
    re: float
    im: float
    degraded_precision: bool = False


@dataclass(frozen=True)
class SingularitySet:
    """Ordered zeros of the phase denominator's real part for one l."""

    l: int
    lambda0: float
    zeros: tuple[float, ...]
    brackets: tuple[tuple[float, float], ...]
    degenerate: tuple[float, ...] = field(default_factory=tuple)


def arg_branch(p) -> float:
    """arctan(im/re) on the principal branch (-pi/2, pi/2]; re = 0 -> +pi/2."""
    re, im = (p.re, p.im) if isinstance(p, ComplexPoint) else (float(p[0]), float(p[1]))
    if re == 0.0:
        if im == 0.0:
            raise ValueError("argument of (0, 0) is undefined")
        return _HALF_PI if im > 0.0 else -_HALF_PI
    return math.atan(im / re)


def mode_phase(l, x, lambda0, *, precision: str | None = None,
               cancel_bound: float = DEFAULT_CANCEL_BOUND) -> ModePhaseTerm:
    """Phase of -x^2 - lambda0 f_H(l, ix) with the principal arctan branch.

    Zero coupling gives exactly zero.  When the cancellation sentinel trips
    and precision allows, the point is re-evaluated in the wide backend.
    """
    li = l.l if isinstance(l, ModeIndex) else int(l)
    xf = float(x)
    lam = float(lambda0)
    if xf <= 0:
        raise ValueError("x must be positive")
    if lam < 0:
        raise ValueError("lambda0 must be nonnegative")
    if lam == 0.0:
        return ModePhaseTerm(l=li, x=xf, value=0.0, re=-xf * xf, im=0.0)
    mode = specfun.resolve_precision(precision)
    degraded = False
    if mode == "extended":
        re, im = specfun.phase_parts_mp(li, xf, lam)
    else:
        rr, ii, dd = specfun.phase_parts_rows(np.asarray([xf]), lam, li, cancel_bound)
        re, im, degraded = float(rr[li - 1][0]), float(ii[li - 1][0]), bool(dd[li - 1][0])
        if degraded and mode == "auto":
            re, im = specfun.phase_parts_mp(li, xf, lam)
            degraded = False
    value = arg_branch((re, im)) if (re, im) != (0.0, 0.0) else 0.0
    return ModePhaseTerm(l=li, x=xf, value=value, re=re, im=im, degraded_precision=degraded)


# ---------------------------------------------------------------------------
# Zero location
# ---------------------------------------------------------------------------

def _re_pairs(ls: np.ndarray, xs: np.ndarray, lambda0: float) -> np.ndarray:
    """Real part of -x^2 - lambda0 f_H(l, ix) for paired (l_i, x_i) arrays."""
    ls = np.asarray(ls, dtype=np.int64)
    xs = np.asarray(xs, dtype=float)
    L = int(ls.max())
    mS, eS = specfun._ladder_down(xs, L, modified=False)
    mY, eY = specfun._ladder_up(xs, L, modified=False)
    cols = np.arange(xs.size)
    lam_half_pi = lambda0 * (math.pi / 2.0)
    pref2 = (2.0 / math.pi) * xs  # (sqrt(2x/pi))^2
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        aJ = np.ldexp(mS[ls - 1, cols], eS[ls - 1, cols] - eS[ls, cols])
        vJ = aJ - (ls / xs) * mS[ls, cols]
        mJ, dJ = np.frexp(vJ)
        eJ = eS[ls, cols] + dJ.astype(np.int64)
        aY = np.ldexp(mY[ls - 1, cols], eY[ls - 1, cols] - eY[ls, cols])
        vY = aY - (ls / xs) * mY[ls, cols]
        mYp, dY = np.frexp(vY)
        eYp = eY[ls, cols] + dY.astype(np.int64)
        p = np.ldexp(lam_half_pi * pref2 * mJ * mYp, eJ + eYp)
    return -xs * xs + p


def _search_window(l: int, lambda0: float) -> float:
    """Upper bound for zeros of re(x) = -x^2 + lambda0 (pi/2) calJ calY.

    Uses the envelope (pi/2) calJ calY < 0.7 nu + 1.3 x + 2 (checked over a
    dense grid in the test suite); beyond the positive root of
    x^2 = lambda0 (0.7 nu + 1.3 x + 2) the real part is strictly negative.
    """
    nu = l + 0.5
    b = 1.3 * lambda0
    disc = b * b + 4.0 * lambda0 * (0.7 * nu + 2.0)
    return 0.5 * (b + math.sqrt(disc)) * 1.25 + 0.5


def _scan_mesh(l: int, lambda0: float, window: float, mesh_cells: int) -> np.ndarray:
    c_l = l * (l + 1) / (2 * l + 1)
    x_lo = 0.5 * math.sqrt(lambda0 * c_l)
    nu = l + 0.5
    mesh = [x_lo]
    split = min(nu, window)
    if split > x_lo * (1 + 1e-12):
        mesh.extend(np.geomspace(x_lo, split, mesh_cells + 1)[1:])
    xcur = split
    while xcur < window:
        xcur = min(xcur + math.pi / 4.0, window)
        mesh.append(xcur)
    return np.asarray(mesh)


def _bisect_batch(ls: np.ndarray, lo: np.ndarray, hi: np.ndarray, flo: np.ndarray,
                  lambda0: float, rel_tol: float) -> np.ndarray:
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        # freeze converged columns so each root's refinement path does not
        # depend on which other roots share the batch
        active = hi - lo > rel_tol * mid
        if not active.any():
            break
        fm = _re_pairs(ls, mid, lambda0)
        go_up = active & ((fm > 0) == (flo > 0))
        go_dn = active & ~go_up
        lo = np.where(go_up, mid, lo)
        hi = np.where(go_dn, mid, hi)
    return 0.5 * (lo + hi)


def _locate_zeros(meshes: dict[int, np.ndarray], lambda0: float, rel_tol: float):
    """Sign-scan + batched bisection over {l: mesh}; returns {l: (zeros, brackets)}."""
    all_ls = np.concatenate([np.full(m.size, l, dtype=np.int64) for l, m in meshes.items()])
    all_xs = np.concatenate(list(meshes.values()))
    vals = _re_pairs(all_ls, all_xs, lambda0)
    b_l: list[int] = []
    b_lo: list[float] = []
    b_hi: list[float] = []
    b_flo: list[float] = []
    b_cell: list[tuple[float, float]] = []
    off = 0
    for l, mesh in meshes.items():
        v = vals[off:off + mesh.size]
        off += mesh.size
        sgn = np.sign(v)
        idx = np.nonzero((sgn[:-1] * sgn[1:] < 0) & (v[:-1] != 0.0))[0]
        for i in idx:
            a, b = float(mesh[i]), float(mesh[i + 1])
            sub = np.linspace(a, b, 9)
            fsub = _re_pairs(np.full(9, l, dtype=np.int64), sub, lambda0)
            ssgn = np.sign(fsub)
            changes = np.nonzero(ssgn[:-1] * ssgn[1:] < 0)[0]
            if len(changes) > 1:
                raise MeshResolutionError(l, (a, b))
            j = int(changes[0]) if len(changes) else 0
            b_l.append(l)
            b_lo.append(float(sub[j]))
            b_hi.append(float(sub[j + 1]))
            b_flo.append(float(fsub[j]))
            b_cell.append((a, b))
    out: dict[int, tuple[list[float], list[tuple[float, float]]]] = {l: ([], []) for l in meshes}
    if b_l:
        roots = _bisect_batch(np.asarray(b_l), np.asarray(b_lo), np.asarray(b_hi),
                              np.asarray(b_flo), lambda0, rel_tol)
        for l, r, cell in zip(b_l, roots, b_cell):
            out[l][0].append(float(r))
            out[l][1].append(cell)
    return out


def _zeros_for_l(l: int, lambda0: float, x_max: float, rel_tol: float,
                 mesh_cells: int) -> SingularitySet:
    window = min(x_max, _search_window(l, lambda0))
    c_l = l * (l + 1) / (2 * l + 1)
    x_lo = 0.5 * math.sqrt(lambda0 * c_l)
    if window <= x_lo:
        window = min(x_max, x_lo * 4.0)
    located = _locate_zeros({l: _scan_mesh(l, lambda0, window, mesh_cells)}, lambda0, rel_tol)
    zeros, brackets = located[l]

    # sparse belt-and-suspenders probe above the analytic window
    if window < x_max:
        probe = np.geomspace(window, x_max, 24)
        pv = _re_pairs(np.full(probe.size, l, dtype=np.int64), probe, lambda0)
        if np.any(pv >= 0):
            extra = np.arange(window, x_max + math.pi / 4.0, math.pi / 4.0)
            located = _locate_zeros({l: extra}, lambda0, rel_tol)
            zeros = zeros + located[l][0]
            brackets = brackets + located[l][1]

    order = np.argsort(zeros)
    return SingularitySet(
        l=l,
        lambda0=lambda0,
        zeros=tuple(float(zeros[i]) for i in order),
        brackets=tuple(brackets[i] for i in order),
    )


def find_denominator_zeros(l, lambda0, x_max, *, rel_tol: float = 1e-13,
                           mesh_cells: int = 64) -> SingularitySet:
    """All zeros of the real part of -x^2 - lambda0 f_H(l, ix) in (0, x_max].

    Sign-scan on a mesh finer than the Bessel oscillation (step <= pi/4 above
    nu, log-spaced cells below), each crossing refined by bisection.  Cells
    that still hide more than one crossing after one 8x refinement raise
    MeshResolutionError.
    """
    li = l.l if isinstance(l, ModeIndex) else int(l)
    lam = float(lambda0)
    xmax = float(x_max)
    if lam <= 0 or xmax <= 0:
        raise ValueError("lambda0 and x_max must be positive")
    return _zeros_for_l(li, lam, xmax, rel_tol, mesh_cells)


_ZEROS_CACHE: dict[tuple[int, float], tuple[float, ...]] = {}


def collect_breakpoints(lambda0: float, x_max: float, l_top: int,
                        rel_tol: float = 1e-13) -> list[float]:
    """Union of denominator zeros over l = 1..l_top, clipped to (0, x_max].

    Scans all missing l in one batched pass; zeros per (l, lambda0) live in a
    per-process memo covering the full envelope window, so repeated calls
    (entropy stencils, sweeps over t) do not re-search.
    """
    missing = [l for l in range(1, l_top + 1) if (l, lambda0) not in _ZEROS_CACHE]
    if missing:
        meshes = {l: _scan_mesh(l, lambda0, _search_window(l, lambda0), 64) for l in missing}
        located = _locate_zeros(meshes, lambda0, rel_tol)
        if len(_ZEROS_CACHE) > 200_000:
            _ZEROS_CACHE.clear()
        for l in missing:
            _ZEROS_CACHE[(l, lambda0)] = tuple(sorted(located[l][0]))
    out: set[float] = set()
    for l in range(1, l_top + 1):
        out.update(z for z in _ZEROS_CACHE[(l, lambda0)] if z <= x_max)
    # batched sparse probe above the analytic windows (envelope safety net)
    probes = {l: np.geomspace(w, x_max, 16)
              for l in range(1, l_top + 1)
              if (w := _search_window(l, lambda0)) < x_max}
    if probes:
        pls = np.concatenate([np.full(m.size, l, dtype=np.int64) for l, m in probes.items()])
        pxs = np.concatenate(list(probes.values()))
        pv = _re_pairs(pls, pxs, lambda0)
        suspect = sorted(set(pls[pv >= 0].tolist()))
        for l in suspect:
            ss = _zeros_for_l(int(l), lambda0, x_max, rel_tol, 64)
            out.update(z for z in ss.zeros if z <= x_max)
    return sorted(out)


# ---------------------------------------------------------------------------
# Batched phase sums over l (the integrand of the exact free energy)
# ---------------------------------------------------------------------------

def phase_sum_batch(x, lambda0: float, *, rel_tol: float = 1e-8,
                    l_hard_cap: int = 4000, precision: str | None = None,
                    cancel_bound: float = DEFAULT_CANCEL_BOUND):
    """sum_{l>=1} (2l+1) * phase(l, x) for a vector of abscissae.

    Returns (values, l_max, converged, degraded); the sum is truncated when
    a geometric extrapolation of the last three terms falls below rel_tol
    of the running partial sum, but never before l = max(10, 2*ceil(x)).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lam = float(lambda0)
    n = x.size
    if lam == 0.0:
        return np.zeros(n), np.full(n, 10), np.ones(n, bool), np.zeros(n, bool)
    mode = specfun.resolve_precision(precision)
    if mode == "extended":
        vals = np.empty(n)
        lmx = np.empty(n, dtype=int)
        for i in range(n):
            vals[i], lmx[i] = _phase_sum_mp(float(x[i]), lam, rel_tol, l_hard_cap)
        return vals, lmx, np.ones(n, bool), np.zeros(n, bool)

    floor = np.maximum(10, 2 * np.ceil(x).astype(np.int64))
    # per-column summation cap keeps each column's value independent of the
    # other abscissae sharing the batch (bit-stable across any grouping)
    l_col = np.minimum(l_hard_cap, floor + 8)
    while True:
        L = int(l_col.max())
        re, im, degr = specfun.phase_parts_rows(x, lam, L, cancel_bound)
        tau = _branch_rows(re, im)
        weights = (2 * np.arange(1, L + 1) + 1)[:, None]
        tau = weights * tau
        rows = np.arange(1, L + 1)[:, None]
        live = rows <= l_col[None, :]
        tau = np.where(live, tau, 0.0)
        degr = degr & live
        if mode == "auto" and degr.any():
            rr_idx, cc_idx = np.nonzero(degr)
            for r, c in zip(rr_idx, cc_idx):
                rr, ii = specfun.phase_parts_mp(r + 1, float(x[c]), lam)
                tau[r, c] = (2 * (r + 1) + 1) * (arg_branch((rr, ii)) if (rr, ii) != (0.0, 0.0) else 0.0)
            degr = np.zeros_like(degr)
        partial = np.cumsum(tau, axis=0)
        lmax, ok = _truncation_point(tau, partial, floor, rel_tol, l_col)
        if ok.all() or np.all(l_col >= l_hard_cap):
            return partial[-1], lmax, ok, degr.any(axis=0)
        l_col = np.where(ok, l_col,
                         np.minimum(l_hard_cap, (1.5 * l_col).astype(np.int64) + 8))


def _branch_rows(re, im):
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = im / re
        tau = np.arctan(ratio)
        tau = np.where(re == 0.0, np.where(im > 0, _HALF_PI, np.where(im < 0, -_HALF_PI, 0.0)), tau)
        tau = np.where((re < 0) & (im == 0.0), 0.0, tau)
    return np.nan_to_num(tau, nan=0.0)


def _truncation_point(tau, partial, floor, rel_tol, l_col):
    """Per-column l index where the geometric tail bound clears rel_tol."""
    L, n = tau.shape
    atau = np.abs(tau)
    scale = np.maximum(np.abs(partial), 1e-300)
    ok_rows = np.zeros((L, n), dtype=bool)
    if L >= 3:
        a0 = atau[2:]
        a1 = atau[1:-1]
        a2 = atau[:-2]
        with np.errstate(divide="ignore", invalid="ignore"):
            rr = np.maximum(
                np.where(a1 > 0, a0 / a1, np.inf),
                np.where(a2 > 0, a1 / a2, np.inf),
            )
            tail = np.where(rr < 1.0, a0 * rr / (1.0 - rr), np.inf)
        dead = (a0 == 0.0) & (a1 == 0.0)
        decreasing = (a0 < a1) & (a1 < a2)
        passes = dead | (decreasing & (tail <= rel_tol * scale[2:]))
        rows = np.arange(3, L + 1)[:, None]
        in_range = (rows >= np.maximum(floor[None, :], 3)) & (rows <= l_col[None, :])
        ok_rows[2:] = passes & in_range
    ok = ok_rows.any(axis=0)
    lmax = np.where(ok, ok_rows.argmax(axis=0) + 1, np.minimum(L, l_col))
    return lmax.astype(int), ok


def _phase_sum_mp(x: float, lambda0: float, rel_tol: float, l_hard_cap: int,
                  dps: int = DEFAULT_EXTENDED_DPS):
    floor = max(10, 2 * math.ceil(x))
    total = 0.0
    hist: list[float] = []
    l = 0
    while l < l_hard_cap:
        l += 1
        re, im = specfun.phase_parts_mp(l, x, lambda0, dps)
        if re == 0.0:
            term = _HALF_PI if im > 0 else (-_HALF_PI if im < 0 else 0.0)
        else:
            term = math.atan(im / re)
        term *= (2 * l + 1)
        total += term
        hist.append(abs(term))
        if l >= floor and len(hist) >= 3:
            a2, a1, a0 = hist[-3], hist[-2], hist[-1]
            if a0 == 0.0 and a1 == 0.0:
                break
            if a0 < a1 < a2:
                rr = max(a0 / a1, a1 / a2)
                if rr < 1.0 and a0 * rr / (1 - rr) <= rel_tol * max(abs(total), 1e-300):
                    break
    return total, l
