import math

import numpy as np
import pytest

from casimir_shell import phase as ph
from casimir_shell import specfun as sf

import oracles

HALF_PI = math.pi / 2.0

# frozen with oracles.py at 40 digits
PHASE_1_05_LAM1 = 0.15608191916300952565


class TestArgBranch:
    def test_positive_real_axis(self):
        assert ph.arg_branch((1.0, 0.0)) == 0.0

    def test_branch_boundary_maps_to_plus_half_pi(self):
        assert ph.arg_branch((0.0, 1.0)) == HALF_PI

    def test_second_quadrant_stays_on_principal_branch(self):
        # (-1, 1) gives arctan(-1) = -pi/4, never 3 pi/4
        assert ph.arg_branch((-1.0, 1.0)) == pytest.approx(-math.pi / 4.0, rel=1e-15)

    def test_origin_rejected(self):
        with pytest.raises(ValueError):
            ph.arg_branch((0.0, 0.0))

    def test_accepts_complex_point(self):
        assert ph.arg_branch(sf.ComplexPoint(1.0, 1.0)) == pytest.approx(math.pi / 4.0)

    def test_containment_random(self):
        rng = np.random.default_rng(3)
        for re, im in rng.normal(size=(2000, 2)):
            if (re, im) == (0.0, 0.0):
                continue
            v = ph.arg_branch((re, im))
            assert -HALF_PI < v <= HALF_PI


class TestModePhase:
    def test_zero_coupling_is_exactly_zero(self):
        for l, x in [(1, 0.1), (3, 2.0), (20, 15.0)]:
            assert ph.mode_phase(l, x, 0.0).value == 0.0

    def test_frozen_value(self):
        t = ph.mode_phase(1, 0.5, 1.0)
        assert t.value == pytest.approx(PHASE_1_05_LAM1, rel=1e-10)
        assert not t.degraded_precision

    def test_small_x_reduced_form(self):
        # leading phase: arctan[(2/3) x^3 / (1 - 3 x^2/(2 lambda0))]
        lam = 1e-4
        x = 0.5 * math.sqrt(lam)  # x^2/lambda0 = 1/4
        expected = math.atan((2.0 / 3.0) * x**3 / (1.0 - 3.0 * x * x / (2.0 * lam)))
        assert ph.mode_phase(1, x, lam).value == pytest.approx(expected, rel=5e-3)

    def test_branch_containment_grid(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            l = int(rng.integers(1, 30))
            x = float(np.exp(rng.uniform(np.log(1e-2), np.log(20))))
            lam = float(np.exp(rng.uniform(np.log(1e-4), np.log(10))))
            v = ph.mode_phase(l, x, lam).value
            assert -HALF_PI < v <= HALF_PI

    def test_decay_in_l(self):
        # |phase| eventually decreasing and -> 0 as l grows; "eventually"
        # means past the oscillatory regime and past the real-part crossing
        # in l near nu ~ 2 x^2 / lambda0
        for x, lam in [(0.7, 0.5), (5.0, 2.0), (10.0, 10.0)]:
            vals = [abs(ph.mode_phase(l, x, lam).value) for l in range(1, 71)]
            start = max(math.ceil(x) + 3, math.ceil(2.0 * x * x / lam) + 2)
            tail = vals[start:]
            assert all(a >= b for a, b in zip(tail, tail[1:]) if b > 0)
            assert vals[-1] < 1e-12 or vals[-1] < 1e-6 * max(vals)


class TestDenominatorZeros:
    def test_weak_coupling_lowest_zero(self):
        for lam in (1e-6, 1e-4):
            ss = ph.find_denominator_zeros(1, lam, 2.0)
            assert ss.zeros[0] == pytest.approx(math.sqrt(2.0 * lam / 3.0), rel=1e-3)

    def test_zeros_strictly_increasing(self):
        ss = ph.find_denominator_zeros(1, 8.0, 30.0)
        assert all(a < b for a, b in zip(ss.zeros, ss.zeros[1:]))

    def test_count_matches_fine_mesh_oracle(self):
        lam, x_max = 1.0, 20.0
        for l in (1, 2, 5):
            ss = ph.find_denominator_zeros(l, lam, x_max)
            xs = np.linspace(1e-4, x_max, 200_001)
            re = ph._re_pairs(np.full(xs.size, l), xs, lam)
            crossings = int(np.sum(np.sign(re[:-1]) * np.sign(re[1:]) < 0))
            assert len(ss.zeros) == crossings

    def test_sign_change_across_each_zero(self):
        ss = ph.find_denominator_zeros(2, 3.0, 15.0)
        for z in ss.zeros:
            lo = ph._re_pairs(np.asarray([2]), np.asarray([z * (1 - 1e-6)]), 3.0)[0]
            hi = ph._re_pairs(np.asarray([2]), np.asarray([z * (1 + 1e-6)]), 3.0)[0]
            assert lo * hi < 0

    def test_jump_is_pi_across_zero(self):
        for l, lam in [(1, 1.0), (2, 0.5)]:
            ss = ph.find_denominator_zeros(l, lam, 10.0)
            z = ss.zeros[0]
            jump = ph.mode_phase(l, z - 1e-6, lam).value - ph.mode_phase(l, z + 1e-6, lam).value
            assert jump == pytest.approx(math.pi, abs=1e-3)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            ph.find_denominator_zeros(1, 0.0, 5.0)
        with pytest.raises(ValueError):
            ph.find_denominator_zeros(1, 1.0, -1.0)

    def test_envelope_bound_validates(self):
        # zeros can only live below the quadratic-balance window used by the
        # search; check the envelope 0.7 nu + 1.3 x + 2 on a stress grid
        rng = np.random.default_rng(1)
        for l in (1, 2, 5, 17, 60, 200):
            xs = np.exp(rng.uniform(np.log(1e-3), np.log(500.0), 300))
            re1, _, _ = sf.phase_parts_rows(xs, 1.0, l)
            prod = re1[l - 1] + xs * xs  # (pi/2) calJ calY
            assert np.all(prod < 0.7 * (l + 0.5) + 1.3 * xs + 2.0)

    def test_collect_breakpoints_union(self):
        pts = ph.collect_breakpoints(1.0, 20.0, 5)
        per_l = set()
        for l in range(1, 6):
            per_l.update(z for z in ph.find_denominator_zeros(l, 1.0, 20.0).zeros)
        assert pts == sorted(per_l)


class TestPhaseSumBatch:
    def test_matches_scalar_mode_phase(self):
        lam = 0.8
        xs = np.asarray([0.3, 1.7, 6.1])
        vals, lmax, ok, degr = ph.phase_sum_batch(xs, lam, rel_tol=1e-10)
        for i, x in enumerate(xs):
            direct = sum((2 * l + 1) * ph.mode_phase(l, float(x), lam).value
                         for l in range(1, int(lmax[i]) + 20))
            assert vals[i] == pytest.approx(direct, rel=1e-9)
        assert ok.all()

    def test_matches_mp_oracle(self):
        lam = 1.0
        for x in (0.35, 2.0, 7.7):
            mine = ph.phase_sum_batch(np.asarray([x]), lam, rel_tol=1e-10)[0][0]
            ref = float(oracles.phase_sum(x, lam, 200, dps=30))
            assert mine == pytest.approx(ref, rel=1e-9, abs=1e-14)

    def test_zero_coupling(self):
        vals, lmax, ok, degr = ph.phase_sum_batch(np.asarray([0.5, 2.0]), 0.0)
        assert np.all(vals == 0.0) and ok.all()

    def test_floor_respected(self):
        _, lmax, _, _ = ph.phase_sum_batch(np.asarray([30.0]), 1.0)
        assert lmax[0] >= 60
