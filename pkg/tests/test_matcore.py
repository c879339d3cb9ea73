import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgenfun.errors import (
    DegenerateBranch,
    NegativeEigenvalue,
    NonHermitianInput,
    NotHermitian,
    NotPositiveSemidefinite,
    TraceNotOne,
)
from qgenfun.matcore import (
    DensityMatrix,
    eig_hermitian,
    sqrt_2x2,
    sqrt_2x2_or_psd,
    sqrt_psd,
    validate_density,
)
from qgenfun.states import SIGMA_X, SIGMA_Z

I2 = np.eye(2, dtype=complex)


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def random_psd2(rng, lo=0.01, hi=2.0):
    u, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    return u @ np.diag(rng.uniform(lo, hi, size=2)) @ u.conj().T


class TestEig:
    def test_diagonal(self):
        e = eig_hermitian(np.diag([0.25, 0.75]))
        np.testing.assert_allclose(e.values, [0.25, 0.75])
        np.testing.assert_allclose(np.abs(e.vectors), np.eye(2), atol=1e-15)

    def test_pauli_x(self):
        e = eig_hermitian(SIGMA_X)
        np.testing.assert_allclose(e.values, [-1, 1], atol=1e-15)
        v = e.vectors
        # eigenvectors (1, -1)/sqrt2 and (1, 1)/sqrt2 up to phase
        assert abs(abs(np.vdot(v[:, 0], np.array([1, -1]) / np.sqrt(2))) - 1) < 1e-14
        assert abs(abs(np.vdot(v[:, 1], np.array([1, 1]) / np.sqrt(2))) - 1) < 1e-14

    def test_bloch_x_state(self):
        t = np.tanh(0.8)
        e = eig_hermitian(0.5 * (I2 - t * SIGMA_X))
        np.testing.assert_allclose(e.values, [0.16798161486607551, 0.83201838513392449], atol=1e-14)

    def test_non_hermitian_rejected(self):
        with pytest.raises(NonHermitianInput):
            eig_hermitian(np.array([[1.0, 1.0], [0.0, 1.0]]))

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
    def test_reconstruction_and_orthonormality(self, n):
        rng = np.random.default_rng(n)
        for _ in range(20):
            h = random_hermitian(rng, n)
            e = eig_hermitian(h)
            scale = max(1.0, np.linalg.norm(h))
            assert np.linalg.norm(e.reconstruct() - h) <= 1e-12 * scale * 10
            assert np.linalg.norm(e.vectors.conj().T @ e.vectors - np.eye(n)) <= 1e-12
            assert np.all(np.diff(e.values) >= 0)


class TestSqrt:
    def test_identity(self):
        np.testing.assert_allclose(sqrt_psd(I2), I2, atol=1e-15)
        np.testing.assert_allclose(sqrt_2x2(I2), I2, atol=1e-15)

    def test_diagonal(self):
        np.testing.assert_allclose(sqrt_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)
        np.testing.assert_allclose(sqrt_2x2(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)

    def test_density(self):
        out = sqrt_psd(np.diag([0.75, 0.25]))
        np.testing.assert_allclose(out, np.diag([0.8660254037844386, 0.5]), atol=1e-15)

    def test_levinger_matches_spectral(self):
        m = 0.5 * (I2 + 0.6 * SIGMA_X)
        assert np.linalg.norm(sqrt_2x2(m) - sqrt_psd(m)) <= 1e-12

    def test_negative_eigenvalue(self):
        with pytest.raises(NotPositiveSemidefinite):
            sqrt_psd(np.diag([1.0, -0.1]))

    def test_clamps_rounding(self):
        out = sqrt_psd(np.diag([1.0, -1e-14]))
        assert np.all(np.isfinite(out))
        assert out[1, 1] == 0

    def test_degenerate_branch_and_fallback(self):
        z = np.zeros((2, 2), dtype=complex)
        with pytest.raises(DegenerateBranch):
            sqrt_2x2(z)
        np.testing.assert_allclose(sqrt_2x2_or_psd(z), z)

    def test_thousand_random(self):
        rng = np.random.default_rng(2024)
        worst = max(np.linalg.norm(sqrt_2x2(m) - sqrt_psd(m))
                    for m in (random_psd2(rng) for _ in range(1000)))
        assert worst <= 1e-10

    @pytest.mark.parametrize("c", [0.25, 4.0])
    def test_scaling(self, c):
        rng = np.random.default_rng(5)
        for _ in range(20):
            m = random_psd2(rng)
            assert np.linalg.norm(sqrt_psd(c * m) - np.sqrt(c) * sqrt_psd(m)) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(a=st.floats(0, 3), d=st.floats(0, 3), re=st.floats(-1, 1), im=st.floats(-1, 1))
def test_sqrt_squares_back(a, d, re, im):
    b = complex(re, im)
    # keep the matrix PSD: |b|^2 <= a d
    scale = min(1.0, np.sqrt(a * d) / abs(b)) if abs(b) > 1e-12 else 0.0
    b *= scale * 0.999
    m = np.array([[a, b], [b.conjugate(), d]])
    s = sqrt_2x2_or_psd(m)
    assert np.linalg.norm(s @ s - m) <= 1e-9 * max(1.0, np.linalg.norm(m))
    assert np.linalg.norm(s - s.conj().T) <= 1e-10


class TestValidate:
    def test_maximally_mixed(self):
        dm = validate_density(I2 / 2)
        assert isinstance(dm, DensityMatrix) and dm.n == 2

    def test_diag(self):
        validate_density(np.diag([0.75, 0.25]))

    def test_negative(self):
        with pytest.raises(NegativeEigenvalue):
            validate_density(np.diag([1.2, -0.2]))

    def test_trace(self):
        with pytest.raises(TraceNotOne):
            validate_density(np.diag([0.5, 0.4]))

    def test_hermitian(self):
        with pytest.raises(NotHermitian):
            validate_density(np.array([[0.5, 0.1], [0.0, 0.5]]))

    def test_error_codes_distinct(self):
        codes = {NegativeEigenvalue.code, TraceNotOne.code, NotHermitian.code}
        assert len(codes) == 3

    def test_pauli_z_state(self):
        validate_density(0.5 * (I2 + 0.5 * SIGMA_Z))
