import numpy as np
import pytest

from qmkdv.cutoffs import DEFAULT_CUTOFFS
from qmkdv.dynamics import EquationCoefficients
from qmkdv.energy import (
    ModifiedEnergyParams,
    _block_l2_sq,
    appendix_energy,
    calibrate_as,
    comparability_check,
    difference_energy_k,
    dyadic_energy_norm,
    modified_energy_k,
    modified_energy_total,
)
from qmkdv.evolve import EvolveConfig, evolve
from qmkdv.spectral import (
    FrequencyGrid,
    SpectralField,
    cosine_field,
    random_hs_field,
    random_real_field,
    sobolev_norm,
    zero_field,
)


def symmetric_pair(grid, n0, amp=0.5):
    c = np.zeros(2 * grid.max_mode + 1, dtype=complex)
    c[grid.max_mode + n0] = amp
    c[grid.max_mode - n0] = amp
    return SpectralField(grid, c)


def correction_sum_oracle(c12, c34, k, weight3):
    """Independent route: for each (n, n3), the pair sum over (n1, n2) is a
    full convolution of the field with its mode -n dropped."""
    fam = DEFAULT_CUTOFFS
    nmax = (len(c12) - 1) // 2
    modes = np.arange(-nmax, nmax + 1)
    chi_n = fam.chi(k, modes.astype(float))
    w3 = fam.psi(k, modes.astype(float)) if weight3 == "psi" else fam.chi(
        k, modes.astype(float)
    )
    total = 0.0 + 0.0j
    for i in np.nonzero(chi_n)[0]:
        n = modes[i]
        if n == 0:
            continue
        masked = c12.copy()
        masked[-n + nmax] = 0.0
        pair = np.convolve(masked, masked)  # index q + 2 nmax
        for j in np.nonzero(w3)[0]:
            n3 = modes[j]
            if n3 == 0 or n3 == -n:
                continue
            q = -n - n3
            if abs(q) > 2 * nmax:
                continue
            total += (
                pair[q + 2 * nmax]
                * (w3[j] / n3)
                * c34[j]
                * (chi_n[i] / n)
                * c34[i]
            )
    return total


class TestDyadicProxy:
    def test_zero(self):
        g = FrequencyGrid(32)
        assert dyadic_energy_norm(zero_field(g), 2.0) == 0.0

    def test_single_mode_overlap_factor(self):
        g = FrequencyGrid(32)
        v = symmetric_pair(g, 4, amp=1.0)
        # mode 4 sits on the boundary of blocks 2 and 3
        proxy = dyadic_energy_norm(v, 0.0)
        l2_sq = sobolev_norm(v, 0.0) ** 2
        assert 0.5 * l2_sq <= proxy <= 1.0 * l2_sq

    @pytest.mark.parametrize("s", [0.0, 2.0, 3.0])
    def test_equivalence_band(self, s):
        rng = np.random.default_rng(int(10 * s) + 1)
        g = FrequencyGrid(32)
        for _ in range(100):
            v = random_hs_field(g, rng, max(s, 0.6), 1.0)
            ratio = dyadic_energy_norm(v, s) / sobolev_norm(v, s) ** 2
            assert 0.3 <= ratio <= 3.0


class TestModifiedEnergyK:
    def test_zero(self):
        g = FrequencyGrid(32)
        assert modified_energy_k(zero_field(g), 2) == 0.0

    @pytest.mark.parametrize("n0", [2, 3, 5])
    def test_two_mode_corrections_vanish(self, n0):
        g = FrequencyGrid(32)
        v = symmetric_pair(g, n0)
        for k in (1, 2, 3):
            assert modified_energy_k(v, k) == _block_l2_sq(v, k)

    def test_matches_convolution_oracle(self):
        rng = np.random.default_rng(3)
        g = FrequencyGrid(32)
        params = ModifiedEnergyParams()
        from qmkdv.energy import _correction_sum

        for k in (1, 2, 3):
            v = random_real_field(g, rng, amplitude=0.5)
            for weight in ("psi", "chi"):
                direct = _correction_sum(v.coeffs, v.coeffs, k, weight)
                oracle = correction_sum_oracle(v.coeffs, v.coeffs, k, weight)
                assert direct == pytest.approx(oracle, rel=1e-11, abs=1e-14)

    def test_homogeneity_degrees(self):
        rng = np.random.default_rng(7)
        g = FrequencyGrid(32)
        v = random_real_field(g, rng, amplitude=0.3)
        k = 2
        base = _block_l2_sq(v, k)
        corr = modified_energy_k(v, k) - base
        for c in (0.5, 2.0):
            scaled = c * v
            base_c = _block_l2_sq(scaled, k)
            corr_c = modified_energy_k(scaled, k) - base_c
            assert base_c == pytest.approx(c**2 * base, rel=1e-12)
            assert corr_c == pytest.approx(c**4 * corr, rel=1e-9, abs=1e-16)

    def test_size_and_index_validation(self):
        with pytest.raises(ValueError):
            modified_energy_k(zero_field(FrequencyGrid(128)), 2)
        with pytest.raises(ValueError):
            modified_energy_k(zero_field(FrequencyGrid(32)), 0)
        with pytest.raises(ValueError):
            modified_energy_k(zero_field(FrequencyGrid(32, period_scale=2.0)), 1)


class TestDifferenceEnergy:
    def test_zero_difference(self):
        g = FrequencyGrid(32)
        rng = np.random.default_rng(5)
        v2 = random_real_field(g, rng, amplitude=0.3)
        assert difference_energy_k(v2, zero_field(g), 2) == 0.0

    def test_zero_reference_reduces_to_block_mass(self):
        g = FrequencyGrid(32)
        rng = np.random.default_rng(6)
        w = random_real_field(g, rng, amplitude=0.4)
        for k in (1, 2, 3):
            assert difference_energy_k(zero_field(g), w, k) == _block_l2_sq(w, k)

    def test_two_mode_pair_vanishing(self):
        g = FrequencyGrid(32)
        v2 = symmetric_pair(g, 2)
        w = symmetric_pair(g, 3, amp=0.2)
        for k in (1, 2, 3):
            assert difference_energy_k(v2, w, k) == pytest.approx(
                _block_l2_sq(w, k), abs=1e-15
            )

    def test_uses_difference_weights(self):
        rng = np.random.default_rng(8)
        g = FrequencyGrid(32)
        v2 = random_real_field(g, rng, amplitude=0.4)
        w = random_real_field(g, rng, amplitude=0.4)
        custom = ModifiedEnergyParams(alpha_diff=0.0, beta_diff=0.0)
        assert difference_energy_k(v2, w, 2, custom) == _block_l2_sq(w, 2)


class TestTotalsAndComparability:
    def test_zero_trajectory(self):
        g = FrequencyGrid(32)
        assert modified_energy_total(zero_field(g), 3.0) == 0.0

    def test_single_snapshot_reduction(self):
        rng = np.random.default_rng(9)
        g = FrequencyGrid(32)
        v = random_real_field(g, rng, amplitude=0.1)
        s = 3.0
        total = modified_energy_total(v, s)
        kmax = DEFAULT_CUTOFFS.blocks_covering(g.max_mode)
        manual = _block_l2_sq(v, 0) + sum(
            4.0**(s * k) * modified_energy_k(v, k) for k in range(1, kmax + 1)
        )
        assert total == pytest.approx(manual, rel=1e-14)

    def test_sup_over_snapshots(self):
        rng = np.random.default_rng(10)
        g = FrequencyGrid(32)
        fields = [random_real_field(g, rng, amplitude=0.1) for _ in range(3)]
        total = modified_energy_total(fields, 2.0)
        assert total >= max(modified_energy_total(f, 2.0) for f in fields) - 1e-12

    def test_comparability_small_data(self):
        rep = comparability_check(25, 0.05, 3.0, seed=12)
        assert rep.passed
        assert rep.worst_low >= 0.5 and rep.worst_high <= 1.5
        assert rep.max_delta >= rep.delta

    def test_comparability_difference_variant(self):
        rep = comparability_check(15, 0.05, 3.0, seed=13, difference=True)
        assert rep.passed

    def test_comparability_concentrated_block(self):
        # adversarial field concentrated in one dyadic block
        g = FrequencyGrid(32)
        params = ModifiedEnergyParams()
        for n0 in (3, 6, 12):
            v = symmetric_pair(g, n0, amp=1.0)
            v = v.with_coeffs(v.coeffs * (0.05 / sobolev_norm(v, 3.0)))
            proxy = dyadic_energy_norm(v, 3.0)
            total = modified_energy_total(v, 3.0, params)
            assert 0.5 * proxy <= total <= 1.5 * proxy

    def test_rejects_low_regularity(self):
        with pytest.raises(ValueError):
            comparability_check(2, 0.05, 0.4)


class TestAppendixEnergy:
    def test_zero(self):
        g = FrequencyGrid(32)
        assert appendix_energy(zero_field(g), 4.0, 1.0) == 0.0

    def test_no_correction_term(self):
        rng = np.random.default_rng(14)
        g = FrequencyGrid(32)
        u = random_real_field(g, rng, amplitude=0.4)
        n = g.frequencies()
        want = 2.0 * np.pi * float(
            np.sum((np.abs(n) ** 8 + 1.0) * np.abs(u.coeffs) ** 2)
        )
        assert appendix_energy(u, 4.0, 0.0) == pytest.approx(want, rel=1e-12)

    def test_correction_term_quadrature(self):
        # closed form for u = d cos(x), s = 2: the correction integrand is
        # u^2 u_x^2 with integral pi d^4 / 4
        g = FrequencyGrid(64)
        d = 0.3
        u = cosine_field(g, amplitude=d)
        a = 2.0
        base = appendix_energy(u, 2.0, 0.0)
        corrected = appendix_energy(u, 2.0, a)
        assert corrected - base == pytest.approx(a * np.pi * d**4 / 4.0, rel=1e-12)

    def test_comparability_window(self):
        rng = np.random.default_rng(15)
        g = FrequencyGrid(32)
        s, a_s, c_hi = 4.0, 65.0, 2.0
        # fields inside the smallness window ||u||_Hs^2 <= 1/(2 C |a_s|)
        cap = 1.0 / (2.0 * c_hi * abs(a_s))
        for _ in range(20):
            u = random_hs_field(g, rng, s, np.sqrt(cap) * rng.random())
            e = appendix_energy(u, s, a_s)
            hs_sq = 2.0 * np.pi * float(
                np.sum(
                    (np.abs(g.frequencies()) ** (2 * s) + 1.0)
                    * np.abs(u.coeffs) ** 2
                )
            )
            assert 0.5 * hs_sq <= e <= 1.5 * hs_sq

    def test_validation(self):
        g = FrequencyGrid(16)
        with pytest.raises(ValueError):
            appendix_energy(zero_field(g), 1.5, 0.0)


@pytest.fixture(scope="module")
def trajectory():
    g = FrequencyGrid(32)
    u0 = cosine_field(g, amplitude=0.1)
    return evolve(u0, 0.02, EquationCoefficients.integrable(),
                  EvolveConfig(dt=2e-5, record_stride=100))


class TestCalibration:
    def test_reduction_factor(self, trajectory):
        rep = calibrate_as(trajectory, 4.0)
        assert rep.drift < rep.drift_uncorrected / 2.0
        assert rep.reduction_factor >= 2.0

    def test_linear_trajectory_flat_curve(self):
        g = FrequencyGrid(32)
        u0 = cosine_field(g, amplitude=0.1)
        traj = evolve(u0, 1e-3, EquationCoefficients(0.0, 0.0, 0.0, 0.0),
                      EvolveConfig(dt=1e-5, record_stride=20))
        rep = calibrate_as(traj, 4.0)
        # every coefficient conserves a linear flow's energy exactly
        assert rep.drift_uncorrected < 1e-12
        assert rep.drift < 1e-12
        assert max(rep.drifts) < 1e-12

    def test_degenerate_rejected(self):
        g = FrequencyGrid(32)
        traj = [zero_field(g), zero_field(g)]
        with pytest.raises(ValueError):
            calibrate_as(traj, 4.0)
        with pytest.raises(ValueError):
            calibrate_as([zero_field(g)], 4.0)


def test_total_respects_horizon(trajectory):
    from qmkdv.dynamics import compute_constants, gauge_forward

    sym, _ = compute_constants(trajectory.fields[0])
    gauged = gauge_forward(trajectory, sym)
    full = modified_energy_total(gauged, 3.0)
    early = modified_energy_total(gauged, 3.0, horizon=trajectory.times[1])
    assert early <= full + 1e-15
    with pytest.raises(ValueError):
        modified_energy_total(gauged, 3.0, horizon=-1.0)
