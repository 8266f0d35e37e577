import numpy as np
import pytest

import fundsol as fs
from fundsol.errors import SingularSymbolError
from fundsol.materials import ExtendedTensor
from fundsol.symbol import (
    fibonacci_directions,
    inverse_symbol_batch,
    inversion_residual,
    symbol_matrix_batch,
)

from conftest import random_directions

ALL_BUILTINS = ["Laplace", "Cu", "Au", "Ni", "PZT-4", "PVDF", "M1", "M2"]


def degenerate_scalar_material():
    # symbol xi_1^2, singular everywhere on the circle xi_1 = 0; bypasses
    # material validation on purpose
    c = np.zeros((3, 1, 1, 3))
    c[0, 0, 0, 0] = 1.0
    return ExtendedTensor(1, c, name="degenerate")


class TestSymbolMatrix:
    def test_laplace_is_one(self, ext_laplace, rng):
        for xi in random_directions(rng, 10):
            assert fs.symbol_matrix(ext_laplace, xi) == pytest.approx(np.ones((1, 1)))

    def test_isotropic_hand_contraction(self):
        # lam = mu = 1: symbol = (lam + mu) xi xi^T + mu I -> diag(3, 1, 1) at e1
        ext = fs.extend(fs.iso_elastic(1.0, 0.25))
        S = fs.symbol_matrix(ext, [1.0, 0, 0])
        assert np.allclose(S, np.diag([3.0, 1.0, 1.0]), rtol=1e-15, atol=1e-15)

    def test_cu_at_e3(self, ext_cu):
        S = fs.symbol_matrix(ext_cu, [0, 0, 1.0])
        assert np.allclose(S, np.diag([75e9, 75e9, 168e9]), rtol=0, atol=1e-4)

    @pytest.mark.parametrize("name", ALL_BUILTINS)
    def test_symmetry_at_random_directions(self, name, rng):
        ext = fs.extend(fs.builtin(name))
        for xi in random_directions(rng, 100):
            S = fs.symbol_matrix(ext, xi)
            scale = np.max(np.abs(S))
            assert np.max(np.abs(S - S.T)) <= 1e-12 * scale

    def test_homogeneity(self, ext_cu, rng):
        for xi in random_directions(rng, 10):
            for s in (0.5, 2.0, 10.0):
                S1 = fs.symbol_matrix(ext_cu, xi)
                S2 = fs.symbol_matrix(ext_cu, s * xi)
                assert np.allclose(S2, s * s * S1, rtol=1e-13, atol=0)

    def test_antipodal_evenness(self, ext_m2, rng):
        for xi in random_directions(rng, 20):
            a = fs.symbol_matrix(ext_m2, xi)
            b = fs.symbol_matrix(ext_m2, -xi)
            assert np.array_equal(a, b)

    def test_batch_matches_scalar(self, ext_m2, rng):
        dirs = random_directions(rng, 32)
        batch = symbol_matrix_batch(ext_m2, dirs)
        for p, xi in enumerate(dirs):
            assert np.allclose(batch[p], fs.symbol_matrix(ext_m2, xi), rtol=1e-15, atol=0)


class TestInverseSymbol:
    def test_laplace(self, ext_laplace):
        assert fs.inverse_symbol(ext_laplace, [0.6, 0.8, 0.0]) == pytest.approx(
            np.ones((1, 1))
        )

    def test_isotropic_closed_form(self, rng):
        mu, nu = 3.0, 0.2
        ext = fs.extend(fs.iso_elastic(mu, nu))
        for xi in random_directions(rng, 20):
            got = fs.inverse_symbol(ext, xi)
            expect = np.eye(3) / mu - np.outer(xi, xi) / (2 * mu * (1 - nu))
            assert np.allclose(got, expect, rtol=1e-12, atol=1e-15)

    def test_cu_reciprocal_diagonal(self, ext_cu):
        got = fs.inverse_symbol(ext_cu, [0, 0, 1.0])
        assert np.allclose(got, np.diag([1 / 75e9, 1 / 75e9, 1 / 168e9]), rtol=1e-12)

    @pytest.mark.parametrize("name", ALL_BUILTINS)
    def test_residual_after_equilibration(self, name, rng):
        ext = fs.extend(fs.builtin(name))
        for xi in random_directions(rng, 25):
            assert inversion_residual(ext, xi) < 1e-10
            # norm-relative raw residual is also tiny
            S = fs.symbol_matrix(ext, xi)
            X = fs.inverse_symbol(ext, xi)
            resid = np.max(np.abs(S @ X - np.eye(ext.field_dim)))
            assert resid <= 1e-10 * max(np.max(np.abs(S)) * np.max(np.abs(X)), 1.0)

    def test_singular_symbol_raises_with_direction(self):
        ext = degenerate_scalar_material()
        with pytest.raises(SingularSymbolError) as err:
            fs.inverse_symbol(ext, [0.0, 1.0, 0.0])
        assert err.value.direction == (0.0, 1.0, 0.0)
        with pytest.raises(SingularSymbolError):
            inverse_symbol_batch(ext, np.array([[1.0, 0, 0], [0, 0, 1.0]]))

    def test_batch_matches_scalar(self, ext_m2, rng):
        dirs = random_directions(rng, 16)
        batch = inverse_symbol_batch(ext_m2, dirs)
        for p, xi in enumerate(dirs):
            got = fs.inverse_symbol(ext_m2, xi)
            # norm-relative: tiny near-cancelling entries carry no relative accuracy
            assert np.max(np.abs(batch[p] - got)) <= 1e-12 * np.max(np.abs(got))


class TestEllipticityCheck:
    def test_laplace_unit_eigenvalues(self, ext_laplace):
        rep = fs.ellipticity_check(ext_laplace, 100)
        assert rep.min_abs_eig == pytest.approx(1.0, rel=1e-12)
        assert rep.max_abs_eig == pytest.approx(1.0, rel=1e-12)
        assert not rep.indefinite

    def test_cu_positive_definite(self, ext_cu):
        rep = fs.ellipticity_check(ext_cu, 1000)
        assert rep.min_abs_eig > 0
        assert not rep.indefinite
        assert rep.invertible

    def test_m2_indefinite_but_invertible(self, ext_m2):
        rep = fs.ellipticity_check(ext_m2, 1000)
        assert rep.indefinite
        assert rep.invertible

    def test_sample_count_floor(self, ext_cu):
        with pytest.raises(ValueError):
            fs.ellipticity_check(ext_cu, 5)

    def test_fibonacci_directions_on_sphere(self):
        dirs = fibonacci_directions(257)
        assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0, rtol=0, atol=1e-14)
        # reasonably spread: mean should be near zero
        assert np.max(np.abs(dirs.mean(axis=0))) < 0.02
