import math

import numpy as np
import pytest
from scipy.integrate import quad

from kerrcrescent import fock as fk
from kerrcrescent import observables as ob
from kerrcrescent import protocol as pr


@pytest.fixture(scope="module")
def small_conditional():
    p = pr.ProtocolParams(alpha=1.2, beta_mag=1.5, gamma=0.3)
    psi = pr.conditional_state_exact(p, 0.7)
    return fk.FockVector(dim=psi.dim, amps=psi.amps / np.sqrt(fk.norm_sq(psi)))


@pytest.fixture(scope="module")
def fig4_conditional(fig4_params):
    return pr.conditional_state_exact(fig4_params, 0.0)


class TestPhotonStatistics:
    def test_coherent_is_poissonian(self):
        stats = ob.photon_statistics(fk.coherent_fock(6.0, 130))
        assert stats.fano == pytest.approx(1.0, abs=1e-4)

    def test_crescent_squeezing(self, fig4_conditional):
        stats = ob.photon_statistics(fig4_conditional)
        assert stats.variance == pytest.approx(1 / (2 * 0.36) ** 2, rel=0.10)
        ratio = 6.0 / math.sqrt(stats.variance)
        assert 4.0 < ratio < 4.6  # ~4x narrower than the coherent baseline

    def test_shifted_outcome_mean(self, fig4_params):
        stats = ob.photon_statistics(pr.conditional_state_exact(fig4_params, 4.0))
        assert stats.mean == pytest.approx(28.14, abs=0.5)

    def test_density_matrix_input(self, fig4_ensemble):
        rho, _ = fig4_ensemble
        stats = ob.photon_statistics(rho)
        assert stats.probs.sum() == pytest.approx(1.0, abs=1e-8)
        assert stats.fano == pytest.approx(stats.variance / stats.mean, abs=1e-10)

    def test_vacuum_fano_undefined(self):
        stats = ob.photon_statistics(fk.basis_state(0, 4))
        assert math.isnan(stats.fano)

    def test_zero_state_rejected(self):
        with pytest.raises(ValueError):
            ob.photon_statistics(fk.FockVector(dim=3, amps=np.zeros(3, dtype=complex)))

    def test_matches_outcome_average(self, fig4_params, fig4_ensemble):
        # diagonal of rho = P(x)-weighted average of per-outcome statistics
        rho, grid = fig4_ensemble
        stats = ob.photon_statistics(rho)
        acc_m = acc_m2 = wsum = 0.0
        for x, w in zip(grid.points, grid.weights):
            phi = pr.output_state(fig4_params, float(x))
            ns = fk.norm_sq(phi)
            if ns < 1e-30:
                continue
            m, v = fk.number_moments(phi)
            acc_m += w * ns * m
            acc_m2 += w * ns * (v + m * m)
            wsum += w * ns
        assert stats.mean == pytest.approx(acc_m / wsum, rel=1e-6)
        assert stats.variance == pytest.approx(acc_m2 / wsum - (acc_m / wsum) ** 2, rel=1e-6)


class TestSqueezingFactor:
    def test_values(self):
        assert ob.squeezing_factor(pr.ProtocolParams(alpha=6.0, beta_mag=360.0, gamma=1e-3)) \
            == pytest.approx(4.32)
        assert ob.squeezing_factor(pr.ProtocolParams(alpha=30.0, beta_mag=66.0, gamma=1e-3)) \
            == pytest.approx(3.96)
        assert ob.squeezing_factor(pr.ProtocolParams(alpha=6.0, beta_mag=360.0, gamma=0.0)) == 0.0


class TestPurity:
    def test_pure_projector(self):
        c = fk.coherent_fock(1.5, 40)
        rho = ob.DensityMatrix(dim=40, entries=np.outer(c.amps, np.conj(c.amps)))
        assert ob.purity(rho) == pytest.approx(1.0, abs=1e-8)

    def test_maximally_mixed(self):
        rho = ob.DensityMatrix(dim=4, entries=np.eye(4, dtype=complex) / 4)
        assert ob.purity(rho) == pytest.approx(0.25, abs=1e-12)


class TestWigner:
    def test_vacuum(self):
        w = ob.wigner(fk.basis_state(0, 8), step=0.05)
        assert w.values.max() == pytest.approx(1 / np.pi, abs=1e-6)
        assert w.values.min() >= -1e-12
        assert w.mass() == pytest.approx(1.0, abs=1e-3)

    def test_fock_one_extremal_negativity(self):
        w = ob.wigner(fk.basis_state(1, 10), step=0.05)
        i = np.argmin(np.abs(w.x_axis))
        j = np.argmin(np.abs(w.p_axis))
        assert w.values[i, j] == pytest.approx(-1 / np.pi, abs=1e-6)

    def test_coherent_peak(self):
        alpha = 1.0 + 0.5j
        w = ob.wigner(fk.coherent_fock(alpha, 40), step=0.05)
        idx = np.unravel_index(np.argmax(w.values), w.values.shape)
        assert w.x_axis[idx[0]] == pytest.approx(np.sqrt(2) * alpha.real, abs=0.051)
        assert w.p_axis[idx[1]] == pytest.approx(np.sqrt(2) * alpha.imag, abs=0.051)
        assert w.values[idx] == pytest.approx(1 / np.pi, abs=1e-4)

    def test_crescent_negative_inside_ridge(self, fig4_conditional):
        w = ob.wigner(fig4_conditional, step=0.08)
        assert w.values.min() < 0
        X, P = np.meshgrid(w.x_axis, w.p_axis, indexing="ij")
        radius = np.hypot(X, P)
        ridge = radius.flat[np.argmax(w.values)]
        neg = radius[w.values < -1e-4]
        assert neg.size and neg.max() < ridge  # fringes sit radially inward

    def test_bound(self, fig4_conditional, small_conditional):
        for state in (fig4_conditional, small_conditional):
            w = ob.wigner(state, step=0.08)
            assert np.max(np.abs(w.values)) <= 1 / np.pi + 1e-6

    def test_mass(self, fig4_conditional):
        w = ob.wigner(fig4_conditional, step=0.08)
        assert w.mass() == pytest.approx(1.0, abs=1e-3)

    def test_marginals(self, small_conditional):
        w = ob.wigner(small_conditional, step=0.05)
        marginal = w.values.sum(axis=1) * w.p_step
        target = np.abs(ob.wavefunction(small_conditional, w.x_axis)) ** 2
        assert np.max(np.abs(marginal - target)) < 1e-4

    def test_marginals_coherent(self):
        c = fk.coherent_fock(1.5 + 0.7j, 50)
        w = ob.wigner(c, step=0.05)
        marginal = w.values.sum(axis=1) * w.p_step
        target = np.abs(ob.wavefunction(c, w.x_axis)) ** 2
        assert np.max(np.abs(marginal - target)) < 1e-4

    def test_parity_identity(self, small_conditional, fig4_conditional, fig4_ensemble):
        rho, _ = fig4_ensemble
        for state in (small_conditional, fig4_conditional):
            w00 = ob.wigner(state, x_axis=[0.0], p_axis=[0.0], check_mass=False).values[0, 0]
            probs = np.abs(state.amps) ** 2 / fk.norm_sq(state)
            parity = float(np.sum((-1.0) ** np.arange(state.dim) * probs))
            assert abs(np.pi * w00 - parity) < 1e-8
        w00 = ob.wigner(rho, x_axis=[0.0], p_axis=[0.0], check_mass=False).values[0, 0]
        parity = float(np.sum((-1.0) ** np.arange(rho.dim) * np.diagonal(rho.entries).real))
        assert abs(np.pi * w00 - parity) < 1e-8

    def test_autocorr_matches_kernel(self, small_conditional, fig4_conditional):
        for state in (small_conditional, fig4_conditional):
            wk = ob.wigner(state, step=0.08, method="kernel")
            wa = ob.wigner(state, x_axis=wk.x_axis, p_axis=wk.p_axis, method="autocorr")
            assert np.max(np.abs(wk.values - wa.values)) < 1e-10

    def test_autocorr_rejected_for_matrices(self, fig4_ensemble):
        rho, _ = fig4_ensemble
        with pytest.raises(ValueError):
            ob.wigner(rho, method="autocorr")

    def test_coverage_failure(self):
        c = fk.coherent_fock(3.0, 50)
        with pytest.raises(fk.GridCoverageError):
            ob.wigner(c, x_axis=np.linspace(-1, 1, 21), p_axis=np.linspace(-1, 1, 21))

    def test_ensemble_wigner(self, fig4_ensemble):
        rho, _ = fig4_ensemble
        w = ob.wigner(rho, step=0.1)
        assert w.mass() == pytest.approx(1.0, abs=1e-3)
        assert w.values.min() < 0  # mixture keeps its negativity


class TestNegativityVolume:
    def test_vacuum_zero(self):
        w = ob.wigner(fk.basis_state(0, 8), step=0.05)
        assert ob.negativity_volume(w) == 0.0

    def test_fock_one_against_radial_quadrature(self):
        w = ob.wigner(fk.basis_state(1, 10), step=0.05)
        oracle, _ = quad(
            lambda r: 2 * np.pi * r * max(0.0, (1 / np.pi) * (1 - 2 * r * r) * np.exp(-r * r)),
            0.0, 1 / np.sqrt(2))
        assert ob.negativity_volume(w) == pytest.approx(oracle, abs=5e-4)

    def test_contrast_between_regimes(self):
        # strong crescent vs near-Gaussian squeezing, identical resolution
        crisp = pr.ProtocolParams(alpha=3.0, beta_mag=660.0, gamma=1e-3)
        mild = pr.ProtocolParams(alpha=3.0, beta_mag=100.0, gamma=1e-3)
        w_crisp = ob.wigner(pr.conditional_state_exact(crisp, 0.0), step=0.08)
        w_mild = ob.wigner(pr.conditional_state_exact(mild, 0.0), step=0.08)
        assert ob.negativity_volume(w_crisp) > ob.negativity_volume(w_mild)


class TestQuadratureVariance:
    def test_vacuum_half(self):
        for theta in (0.0, 0.7, np.pi / 2):
            assert ob.quadrature_variance(fk.basis_state(0, 5), theta) == pytest.approx(0.5, abs=1e-12)

    def test_coherent_half(self):
        c = fk.coherent_fock(1 + 0.5j, 40)
        for theta in (0.0, 0.3, 1.2):
            assert ob.quadrature_variance(c, theta) == pytest.approx(0.5, abs=1e-6)

    def test_amplitude_squeezing_near_gaussian_regime(self):
        # |alpha| = 30, gamma|beta| = 0.066: strongly amplitude-squeezed.
        # (At the |alpha| = 6 crescent the arc curvature inflates every
        # straight quadrature above vacuum, so this is probed at large
        # |alpha| where the state is close to a squeezed Gaussian.)
        p = pr.ProtocolParams(alpha=30.0, beta_mag=66.0, gamma=1e-3)
        psi = pr.conditional_state_exact(p, 0.0)
        _, ea, _ = ob._mode_moments(
            fk.FockVector(dim=psi.dim, amps=psi.amps / np.sqrt(fk.norm_sq(psi))))
        assert ob.quadrature_variance(psi, float(np.angle(ea))) < 0.5


class TestRadialSection:
    def test_on_axis_matches_grid(self):
        w = ob.wigner(fk.basis_state(1, 10), step=0.05)
        r, vals = ob.radial_section(w, center=(0.0, 0.0), angle=0.0, n_points=101)
        assert np.all(np.isfinite(vals))
        mid = np.argmin(np.abs(r))
        i0 = np.argmin(np.abs(w.x_axis))
        j0 = np.argmin(np.abs(w.p_axis))
        assert vals[mid] == pytest.approx(w.values[i0, j0], abs=1e-9)


class TestWignerGrid:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            ob.WignerGrid(x_axis=np.array([0.0, 1.0]), p_axis=np.array([0.0]),
                          values=np.zeros((1, 2)))

    def test_axes_must_ascend(self):
        with pytest.raises(ValueError):
            ob.WignerGrid(x_axis=np.array([1.0, 0.0]), p_axis=np.array([0.0, 1.0]),
                          values=np.zeros((2, 2)))
