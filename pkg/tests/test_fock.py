import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm
from scipy.special import factorial

from kerrcrescent import fock as fk


def displaced_ops(dim):
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)
    return a, a.conj().T


class TestChooseDim:
    @pytest.mark.parametrize("amag,safety,expected", [(0, 10, 20), (6, 10, 116), (30, 10, 1220)])
    def test_formula(self, amag, safety, expected):
        assert fk.choose_dim(amag, safety) == expected

    @pytest.mark.parametrize("amag", [1.0, 6.0, 30.0])
    def test_tail_guarantee(self, amag):
        v = fk.coherent_fock(amag, fk.choose_dim(amag, 10))
        assert fk.tail_mass(v) < 1e-12

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            fk.choose_dim(-1.0)
        with pytest.raises(ValueError):
            fk.choose_dim(2.0, safety=0.5)


class TestCoherent:
    def test_vacuum(self):
        v = fk.coherent_fock(0.0, 8)
        assert np.array_equal(v.amps, np.eye(8, dtype=complex)[0])

    def test_ground_amplitude(self):
        v = fk.coherent_fock(2.0, 40)
        assert v.amps[0] == pytest.approx(np.exp(-2.0), abs=1e-12)
        assert v.amps[0].imag == 0.0

    def test_poissonian_moments(self):
        v = fk.coherent_fock(6.0, 130)
        mean, var = fk.number_moments(v)
        assert mean == pytest.approx(36.0, abs=1e-6)
        assert var == pytest.approx(36.0, abs=1e-4)

    @pytest.mark.parametrize("amag", [0.5, 2.0, 5.0])
    def test_log_space_matches_direct_formula(self, amag):
        alpha = amag * np.exp(0.3j)
        dim = fk.choose_dim(amag, 10)
        v = fk.coherent_fock(alpha, dim)
        n = np.arange(dim)
        direct = np.exp(-abs(alpha) ** 2 / 2) * alpha ** n / np.sqrt(factorial(n))
        mask = np.abs(direct) > 1e-250
        rel = np.abs(v.amps[mask] - direct[mask]) / np.abs(direct[mask])
        assert rel.max() < 1e-12

    def test_large_amplitude_finite(self):
        v = fk.coherent_fock(30.0, fk.choose_dim(30.0, 10))
        assert np.all(np.isfinite(v.amps))
        assert fk.norm_sq(v) == pytest.approx(1.0, abs=1e-9)

    def test_truncation_error_carries_tail(self):
        with pytest.raises(fk.TruncationError) as err:
            fk.coherent_fock(6.0, 40)
        assert err.value.tail_mass > 1e-9


class TestDisplacement:
    def test_zero_is_identity(self):
        op = fk.displacement_operator(0.0, 12)
        assert np.array_equal(op.entries, np.eye(12, dtype=complex))
        assert op.leakage == 0.0

    def test_vacuum_column_is_coherent(self):
        op = fk.displacement_operator(1.0, 30)
        coh = fk.coherent_fock(1.0, 30)
        assert np.max(np.abs(op.entries[:, 0] - coh.amps)) < 1e-10

    @pytest.mark.parametrize("d", [0.3 + 0.4j, 1.0, 0.5j])
    def test_matches_expm_oracle(self, d):
        dim = 40
        a, adag = displaced_ops(dim)
        oracle = expm(d * adag - np.conj(d) * a)
        op = fk.displacement_operator(d, dim)
        assert np.max(np.abs(op.entries[:20, :20] - oracle[:20, :20])) < 1e-12

    def test_matches_expm_oracle_larger(self):
        d, dim = 2.0 - 1.0j, 80
        a, adag = displaced_ops(dim)
        oracle = expm(d * adag - np.conj(d) * a)
        op = fk.displacement_operator(d, dim)
        assert np.max(np.abs(op.entries[:25, :25] - oracle[:25, :25])) < 1e-9

    def test_inverse_product_identity(self):
        # the published block/dim pairing for this check is unattainable
        # (dim=25 leaves ~1e-2 deficit in row 19); dim=40 gives the headroom
        d1 = fk.displacement_operator(0.5j, 40)
        d2 = fk.displacement_operator(-0.5j, 40)
        prod = d1.entries @ d2.entries
        assert np.max(np.abs(prod[:20, :20] - np.eye(20))) < 1e-8

    @pytest.mark.parametrize("d1,d2", [
        (1.5 + 0.5j, -0.7 + 1.1j),
        (2.0, 2.0j),
        (0.3 - 1.9j, -1.2 - 0.4j),
    ])
    def test_composition_law(self, d1, d2):
        dim, blk = 150, 80
        da = fk.displacement_operator(d1, dim).entries
        db = fk.displacement_operator(d2, dim).entries
        dc = fk.displacement_operator(d1 + d2, dim).entries
        phase = np.exp(1j * np.imag(d1 * np.conj(d2)))
        err = np.abs((da @ db)[:blk, :blk] - phase * dc[:blk, :blk])
        assert err.max() < 1e-7

    def test_unitary_columns_away_from_edge(self):
        d, dim = 3.0, 200
        op = fk.displacement_operator(d, dim)
        norms = np.sum(np.abs(op.entries) ** 2, axis=0)
        # displaced |j> has a hard spectral edge near (sqrt(j) + |d|)^2
        safe = [j for j in range(dim) if (np.sqrt(j) + d) ** 2 + 25 <= dim]
        assert safe
        assert np.max(np.abs(norms[safe] - 1.0)) < 1e-8

    def test_leakage_reported(self):
        op = fk.displacement_operator(2.0, 30)
        assert 0.0 < op.leakage <= 1.0


class TestVectorOps:
    def test_apply_identity(self):
        v = fk.coherent_fock(1.3 + 0.2j, 25)
        ident = fk.FockOperator(dim=25, entries=np.eye(25, dtype=complex))
        assert np.array_equal(fk.apply(ident, v).amps, v.amps)

    def test_dimension_mismatch(self):
        op = fk.displacement_operator(0.1, 10)
        v = fk.coherent_fock(0.0, 12)
        with pytest.raises(ValueError):
            fk.apply(op, v)
        with pytest.raises(ValueError):
            fk.inner(v, fk.coherent_fock(0.0, 10))

    def test_nearby_coherent_overlap(self):
        u = fk.coherent_fock(2.0, 60)
        v = fk.coherent_fock(2.0 + 1e-8, 60)
        assert abs(fk.inner(u, v) - 1.0) < 1e-7

    def test_number_moments_examples(self):
        mean, var = fk.number_moments(fk.basis_state(5, 9))
        assert (mean, var) == pytest.approx((5.0, 0.0), abs=1e-12)
        amps = np.zeros(6, dtype=complex)
        amps[0] = amps[2] = 1 / np.sqrt(2)
        mean, var = fk.number_moments(fk.FockVector(dim=6, amps=amps))
        assert (mean, var) == pytest.approx((1.0, 1.0), abs=1e-12)

    def test_zero_vector_rejected(self):
        zero = fk.FockVector(dim=4, amps=np.zeros(4, dtype=complex))
        with pytest.raises(ValueError):
            fk.number_moments(zero)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            fk.FockVector(dim=3, amps=np.array([1.0, np.inf, 0.0], dtype=complex))


@settings(max_examples=25, deadline=None)
@given(st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False))
def test_coherent_overlap_magnitude(a, b):
    dim = fk.choose_dim(2.0, 10)
    ov = fk.inner(fk.coherent_fock(a, dim), fk.coherent_fock(b, dim))
    assert abs(abs(ov) - np.exp(-abs(a - b) ** 2 / 2)) < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=16))
def test_self_inner_nonnegative(amps):
    v = fk.FockVector(dim=len(amps), amps=np.array(amps, dtype=complex))
    ov = fk.inner(v, v)
    assert ov.imag == pytest.approx(0.0, abs=1e-12)
    assert ov.real >= 0.0


@settings(max_examples=15, deadline=None)
@given(st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False))
def test_composition_property(d1, d2):
    dim, blk = 80, 30
    da = fk.displacement_operator(d1, dim).entries
    db = fk.displacement_operator(d2, dim).entries
    dc = fk.displacement_operator(d1 + d2, dim).entries
    phase = np.exp(1j * np.imag(d1 * np.conj(d2)))
    assert np.max(np.abs((da @ db)[:blk, :blk] - phase * dc[:blk, :blk])) < 1e-8


class TestHermite:
    def test_orthonormal(self):
        xs = np.linspace(-12, 12, 4001)
        h = fk.hermite_functions(10, xs)
        gram = h @ h.T * (xs[1] - xs[0])
        assert np.max(np.abs(gram - np.eye(10))) < 1e-8

    def test_completeness_against_coherent(self):
        # stable far into the n ~ 1000 regime where the naive recurrence dies
        from kerrcrescent.protocol import homodyne_overlap

        for alpha, x in ((1 + 2j, 0.3), (30.0, 42.0)):
            dim = fk.choose_dim(abs(alpha), 10)
            c = fk.coherent_fock(alpha, dim)
            phi = fk.hermite_functions(dim, [x])[:, 0]
            lhs = complex(c.amps @ phi)
            assert abs(lhs - homodyne_overlap(x, alpha)) < 1e-10
