import math

import numpy as np
import pytest

from casimir_shell import phase as ph
from casimir_shell.quadrature import (
    ModeSumResult,
    PoleSeparationError,
    QuadratureConfig,
    bose_integral,
    mode_sum,
    pairwise_sum,
    pv_bose_integral,
)
from casimir_shell.specfun import calJ

import oracles

# frozen with oracles.py at 40 digits: -(1/2)[xi^2/12 - ln xi - Re psi(1 + i/xi)]
PV_Z3_XI1 = 0.0056584936445718219693
PV_Z3_XI5 = -0.50231291317934946438


def _z3_pole(z):
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore"):
        return z**3 / ((1.0 - z) * (1.0 + z))


_z3_pole.vectorized = True


class TestBoseIntegral:
    def test_zeta2(self):
        r = bose_integral(lambda x: x, 2.0 * math.pi)
        assert r.converged
        assert r.value == pytest.approx(math.pi**2 / 6.0, rel=1e-12)

    def test_zeta4(self):
        r = bose_integral(lambda x: x**3, 2.0 * math.pi)
        assert r.value == pytest.approx(math.pi**4 / 15.0, rel=1e-12)

    def test_weak_coupling_closed_form_crosscheck(self):
        # integrand sin^2 x / x + x/3 at alpha = 1 has the closed value
        # (1/4)[log(sinh 1) + 1/18]
        r = bose_integral(lambda x: math.sin(x) ** 2 / x + x / 3.0, 1.0)
        target = 0.25 * (math.log(math.sinh(1.0)) + 1.0 / 18.0)
        assert r.value == pytest.approx(target, rel=1e-10)
        assert target == pytest.approx(0.0542487, abs=5e-8)

    def test_error_estimate_honest(self):
        r = bose_integral(lambda x: x, 2.0 * math.pi)
        assert abs(r.value - math.pi**2 / 6.0) <= 10 * r.error_estimate + 1e-15

    def test_tail_cut_soundness(self):
        cfg = QuadratureConfig()
        cfg2 = QuadratureConfig(tail_cut_weight=cfg.tail_cut_weight**2)
        f = lambda x: x**3
        r1 = bose_integral(f, 2.0 * math.pi, (), cfg)
        r2 = bose_integral(f, 2.0 * math.pi, (), cfg2)
        assert abs(r1.value - r2.value) < r1.error_estimate + 1e-15

    def test_breakpoints_recorded(self):
        r = bose_integral(lambda x: x, 2.0 * math.pi, breakpoints=[1.234])
        assert any(abs(b - 1.234) < 1e-12 for b in r.breakpoints_used)

    def test_rejects_nonpositive_alpha(self):
        with pytest.raises(ValueError):
            bose_integral(lambda x: x, 0.0)

    def test_nonconvergence_is_flagged_not_silent(self):
        cfg = QuadratureConfig(rel_tol=1e-13, abs_tol=1e-30, max_subdivisions=3)
        r = bose_integral(lambda x: abs(math.sin(20.0 * x)) * x, 2.0 * math.pi, (), cfg)
        assert not r.converged

    def test_vectorized_and_scalar_agree(self):
        def fs(x):
            return math.sin(x) ** 2 / x + x / 3.0

        def fv(xs):
            xs = np.asarray(xs, dtype=float)
            return np.sin(xs) ** 2 / xs + xs / 3.0

        fv.vectorized = True
        r1 = bose_integral(fs, 1.0)
        r2 = bose_integral(fv, 1.0)
        assert r1.value == r2.value  # identical nodes, identical arithmetic

    def test_breakpoint_completeness_guard(self):
        # withholding an interior phase jump must either blow the error
        # estimate or break convergence under a tight budget
        lam, t = 2.0, 0.3
        alpha = 2.0 * math.pi * t
        zeros = ph.collect_breakpoints(lam, 10.0, 10)

        def f(xs):
            return ph.phase_sum_batch(np.asarray(xs), lam)[0]

        f.vectorized = True
        cfg = QuadratureConfig(rel_tol=1e-9, max_subdivisions=220)
        with_bp = bose_integral(f, alpha, zeros, cfg)
        without_bp = bose_integral(f, alpha, (), cfg)
        assert with_bp.converged
        assert (not without_bp.converged) or (
            without_bp.error_estimate > 5.0 * with_bp.error_estimate)


class TestPairwiseSum:
    def test_matches_fsum(self):
        rng = np.random.default_rng(0)
        xs = list(rng.normal(size=1001))
        assert pairwise_sum(xs) == pytest.approx(math.fsum(xs), rel=1e-12)

    def test_empty(self):
        assert pairwise_sum([]) == 0.0


class TestPVBoseIntegral:
    def test_digamma_bracket_xi1(self):
        r = pv_bose_integral(_z3_pole, 1.0, [1.0])
        assert r.converged
        assert r.value == pytest.approx(PV_Z3_XI1, rel=1e-8)

    def test_digamma_bracket_xi5(self):
        r = pv_bose_integral(_z3_pole, 5.0, [1.0])
        assert r.converged
        assert r.value == pytest.approx(PV_Z3_XI5, rel=1e-8)

    def test_pv_stability_invariant(self):
        # extrapolated value within error_estimate of the last two finite
        # excision widths
        r = pv_bose_integral(_z3_pole, 5.0, [1.0])
        assert len(r.pv_history) >= 3
        for eps, ival in r.pv_history[-2:]:
            assert abs(r.value - ival) < r.error_estimate

    def test_excision_sequence_stabilizes(self):
        # the stated stability contract: consecutive finite-excision values
        # approach each other as the window shrinks
        r = pv_bose_integral(_z3_pole, 5.0, [1.0])
        ivals = [iv for _, iv in r.pv_history]
        d = [abs(b - a) for a, b in zip(ivals, ivals[1:])]
        assert d[-1] < d[0] / 100.0

    def test_symmetric_pole_pairing_is_stable(self):
        # integrand with f -> 1 at the origin: the origin end is outside the
        # integrable contract, but the pole treatment itself must stay stable
        # across the excision sequence
        def f(z):
            z = np.asarray(z, dtype=float)
            with np.errstate(divide="ignore"):
                return 1.0 / ((1.0 - z) * (1.0 + z))

        f.vectorized = True
        r = pv_bose_integral(f, 2.0 * math.pi, [1.0])
        assert math.isfinite(r.value)
        ivals = [iv for _, iv in r.pv_history]
        rel = QuadratureConfig().rel_tol
        assert abs(ivals[-1] - ivals[-2]) <= max(100 * rel * abs(ivals[-1]), 1e-10)
        assert abs(ivals[-2] - ivals[-3]) <= max(100 * rel * abs(ivals[-1]), 1e-10)

    def test_pole_in_tail_is_ignored(self):
        r = pv_bose_integral(_z3_pole, 0.05, [1e6])
        assert r.converged

    def test_close_poles_shrink_excision(self):
        def f(z):
            z = np.asarray(z, dtype=float)
            return 1.0 / ((z - 1.0) * (z - 1.001))

        f.vectorized = True
        r = pv_bose_integral(f, 2.0 * math.pi, [1.0, 1.001])
        assert math.isfinite(r.value)

    def test_overlapping_poles_error(self):
        def f(z):
            return np.asarray(z, dtype=float)

        f.vectorized = True
        with pytest.raises(PoleSeparationError):
            pv_bose_integral(f, 2.0 * math.pi, [1.0, 1.0 + 1e-15])

    def test_rejects_nonpositive_pole(self):
        with pytest.raises(ValueError):
            pv_bose_integral(_z3_pole, 1.0, [-1.0])


class TestModeSum:
    @pytest.mark.parametrize("x", [0.5, 1.0, 2.0, 5.0, 10.0])
    def test_addition_theorem(self, x):
        # sum_{l>=1} (2l+1) ([x j_l]')^2 = 1 + x^2/3 - cos^2 x
        def term(l):
            J = calJ(l + 0.5, x)
            return (math.pi / (2.0 * x)) * J * J

        cfg = QuadratureConfig(rel_tol=1e-12)
        r = mode_sum(term, cfg, l_min_floor=max(10, 2 * math.ceil(x)))
        target = 1.0 + x * x / 3.0 - math.cos(x) ** 2
        assert r.converged
        assert r.value == pytest.approx(target, rel=1e-10)

    def test_addition_theorem_value_at_1(self):
        assert (1.0 + 1.0 / 3.0 - math.cos(1.0) ** 2) == pytest.approx(1.0414068, abs=1e-7)

    def test_zero_terms(self):
        r = mode_sum(lambda l: 0.0, QuadratureConfig(), l_min_floor=10)
        assert r.value == 0.0
        assert r.l_max == 10
        assert r.converged

    def test_phase_terms_match_oracle(self):
        x, lam = 2.0, 1.0
        r = mode_sum(lambda l: ph.mode_phase(l, x, lam).value,
                     QuadratureConfig(rel_tol=1e-10), l_min_floor=10)
        ref = float(oracles.phase_sum(x, lam, 200, dps=30))
        assert r.value == pytest.approx(ref, rel=1e-9)

    def test_hard_cap_flags(self):
        cfg = QuadratureConfig(l_hard_cap=40)
        r = mode_sum(lambda l: 1.0 / l, cfg)
        assert not r.converged
        assert r.l_max == 40

    def test_floor_insensitivity(self):
        # raising the floor by 50% moves the result by less than rel_tol
        for x in (1.0, 5.0):
            def term(l, x=x):
                J = calJ(l + 0.5, x)
                return (math.pi / (2.0 * x)) * J * J

            cfg = QuadratureConfig(rel_tol=1e-12)
            f1 = max(10, 2 * math.ceil(x))
            r1 = mode_sum(term, cfg, l_min_floor=f1)
            r2 = mode_sum(term, cfg, l_min_floor=math.ceil(1.5 * f1))
            assert abs(r2.value - r1.value) <= max(1e-12 * abs(r1.value), 1e-15)
