"""Kernel evaluation from coefficient tables.

A table of derivative order I evaluates as

    kernel(r) = 1 / (4 pi r^(I+1)) * sum_l P_l^I(0) sum_m C[l, m] Y_l^m(rhat)

where the degree sum runs over l >= I with the parity of I (the P_l^I(0)
prefactor kills every other term exactly).  The angular sum is real up to
quadrature noise in the coefficients; the discarded imaginary part is
reported so callers can monitor table convergence.

Units: with r in meters and SI material constants, a table of order I yields
values in (base kernel units) * m^-(I+1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularPointError, TableConsistencyError
from .expansion import CoeffTable
from .materials import ExtendedTensor
from .special import legendre_p_at_zero, sph_harm_table

__all__ = [
    "KernelValue",
    "evaluate",
    "evaluate_batch",
    "traction_kernel",
    "SphereField",
    "sample_sphere",
    "spherical_plot_mesh",
    "export_field_csv",
    "export_field_mesh",
    "regular_part_at",
]

_CHUNK = 4096  # directions per harmonic-table chunk


def _degree_prefactors(table: CoeffTable) -> tuple[np.ndarray, np.ndarray]:
    """Degrees with the parity of the derivative order and their P_l^I(0)."""
    I = table.order
    ells = np.arange(I, table.max_degree + 1, 2, dtype=int)
    prefs = np.array([legendre_p_at_zero(l, I) for l in ells])
    return ells, prefs


def regular_part_at(table: CoeffTable, theta, phi) -> np.ndarray:
    """Angular (regular) factor sum_l P_l^I(0) sum_m C[l,m] Y_l^m at directions.

    Returns complex (P, N, N); the physical kernel is real(...) / (4 pi r^(I+1)).
    Exploits the conjugation symmetry of the table: orders m >= 1 contribute
    2 Re(C Y), so only nonnegative orders are evaluated.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    phi = np.atleast_1d(np.asarray(phi, dtype=np.float64))
    n = table.field_dim
    L = table.max_degree
    ells, prefs = _degree_prefactors(table)
    out = np.zeros((theta.size, n, n), dtype=np.complex128)
    if ells.size == 0:
        return out
    # m >= 0 slice of the table, weighted by the degree prefactor
    weighted = table.coeffs[:, L:, :, :].copy()
    pref_all = np.zeros(L + 1)
    pref_all[ells] = prefs
    weighted *= pref_all[:, None, None, None]
    for start in range(0, theta.size, _CHUNK):
        sl = slice(start, min(start + _CHUNK, theta.size))
        Y = sph_harm_table(L, theta[sl], phi[sl])  # (L+1, L+1, u)
        acc = np.zeros((sl.stop - sl.start, n, n), dtype=np.complex128)
        for l in ells[::-1]:  # high degrees first: add the small terms early
            # negative orders mirror the positive ones through conjugation,
            # so they contribute 2 Re(C Y); only the (real up to quadrature
            # noise) m = 0 block can leave an imaginary residual
            acc += np.einsum("jk,u->ujk", weighted[l, 0], Y[l, 0])
            if l > 0:
                acc += 2.0 * np.einsum(
                    "mjk,mu->ujk", weighted[l, 1 : l + 1], Y[l, 1 : l + 1]
                ).real
        out[sl] = acc
    return out


def _imag_residual(acc: np.ndarray) -> float:
    re_max = float(np.max(np.abs(acc.real)))
    im_max = float(np.max(np.abs(acc.imag)))
    return im_max / re_max if re_max > 0.0 else im_max


@dataclass(frozen=True)
class KernelValue:
    """Real kernel matrix plus the relative size of the discarded imaginary part."""

    matrix: np.ndarray
    imag_residual: float


def evaluate_batch(table: CoeffTable, points) -> list[KernelValue]:
    """Evaluate the table at a batch of field points (list of 3-vectors).

    Points sharing a direction reuse one harmonic evaluation; the returned
    list preserves input order.  A zero-length point raises
    SingularPointError naming its index.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.size == 0:
        return []
    if pts.shape[1] != 3:
        raise ValueError(f"points must be 3-vectors, got shape {pts.shape}")
    radii = np.linalg.norm(pts, axis=1)
    zero = np.nonzero(radii == 0.0)[0]
    if zero.size:
        raise SingularPointError(index=int(zero[0]))
    rhat = pts / radii[:, None]
    uniq, inverse = np.unique(rhat, axis=0, return_inverse=True)
    theta = np.arccos(np.clip(uniq[:, 2], -1.0, 1.0))
    phi = np.arctan2(uniq[:, 1], uniq[:, 0])
    reg = regular_part_at(table, theta, phi)[inverse]
    scale = 1.0 / (4.0 * np.pi * radii ** (table.order + 1))
    out = []
    for p in range(pts.shape[0]):
        acc = reg[p] * scale[p]
        out.append(KernelValue(matrix=acc.real.copy(), imag_residual=_imag_residual(acc)))
    return out


def evaluate(table: CoeffTable, r) -> KernelValue:
    """Kernel value at a single field point r (meters)."""
    return evaluate_batch(table, np.asarray(r, dtype=np.float64)[np.newaxis, :])[0]


def traction_kernel(
    ext: ExtendedTensor, first_deriv_tables, r, n_hat
) -> np.ndarray:
    """Traction-type kernel: normal-projected generalized stress of the kernel field.

    T[P, J] = n_i c[i, J, K, l] d(Phi[P, K])/d(r_l), assembled from the three
    first-derivative tables (axes 1, 2, 3 in order).  All tables must carry
    the material hash of `ext`.
    """
    tables = list(first_deriv_tables)
    if len(tables) != 3:
        raise TableConsistencyError("need exactly three first-derivative tables")
    expected = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    for axis, (tab, mi) in enumerate(zip(tables, expected), start=1):
        if tab.multi_index != mi:
            raise TableConsistencyError(
                f"table {axis} has multi-index {tab.multi_index}, expected {mi}"
            )
        if tab.material_hash != ext.material_hash:
            raise TableConsistencyError(
                f"table {axis} hash {tab.material_hash[:12]}... does not match "
                f"material {ext.material_hash[:12]}..."
            )
    n_hat = np.asarray(n_hat, dtype=np.float64)
    grads = np.stack([evaluate(tab, r).matrix for tab in tables])  # (l, P, K)
    return np.einsum("i,ijkl,lpk->pj", n_hat, ext.c, grads)


@dataclass(frozen=True)
class SphereField:
    """Kernel samples on a Gauss-Legendre x uniform-azimuth sphere grid.

    values[a, b] is the N x N kernel matrix at direction (theta[a], phi[b])
    with |r| = 1; weights integrate over the sphere (sum 4 pi).
    """

    theta: np.ndarray
    phi: np.ndarray
    values: np.ndarray  # (n_theta, n_phi, N, N)
    weights: np.ndarray  # (n_theta, n_phi)
    imag_residual: float = 0.0

    @property
    def field_dim(self) -> int:
        return self.values.shape[-1]

    def integrate_abs(self) -> np.ndarray:
        """Integral of |values| over the sphere, per component (N, N)."""
        return np.einsum("ab,abjk->jk", self.weights, np.abs(self.values))

    def integrate(self) -> np.ndarray:
        return np.einsum("ab,abjk->jk", self.weights, self.values)


def sample_sphere(table: CoeffTable, n_theta: int, n_phi: int) -> SphereField:
    """Evaluate a table on an n_theta x n_phi direction grid at unit radius."""
    if n_theta < 2 or n_phi < 3:
        raise ValueError("grid must be at least 2 x 3")
    t, wt = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(t)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    th_grid = np.repeat(theta, n_phi)
    ph_grid = np.tile(phi, n_theta)
    reg = regular_part_at(table, th_grid, ph_grid)
    n = table.field_dim
    vals = reg.reshape(n_theta, n_phi, n, n) / (4.0 * np.pi)
    weights = np.outer(wt, np.full(n_phi, 2.0 * np.pi / n_phi))
    return SphereField(
        theta=theta,
        phi=phi,
        values=vals.real.copy(),
        weights=weights,
        imag_residual=_imag_residual(reg),
    )


def sphere_field_from_values(field: SphereField, values: np.ndarray) -> SphereField:
    """Same grid as `field` but with replacement values (oracle fields)."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != field.values.shape:
        raise ValueError(f"value shape {values.shape} != grid shape {field.values.shape}")
    return SphereField(field.theta, field.phi, values, field.weights)


def spherical_plot_mesh(field: SphereField, i: int, j: int):
    """Amplitude-plot coordinates: radius |component| along each direction.

    Returns (rho, x, y, z), each of shape (n_theta, n_phi).
    """
    rho = np.abs(field.values[:, :, i, j])
    st = np.sin(field.theta)[:, None]
    ct = np.cos(field.theta)[:, None]
    x = rho * st * np.cos(field.phi)[None, :]
    y = rho * st * np.sin(field.phi)[None, :]
    z = rho * ct
    return rho, x, y, z


def export_field_csv(field: SphereField, i: int, j: int, path) -> None:
    """CSV rows (theta, phi, value, x, y, z) for the selected component."""
    _, x, y, z = spherical_plot_mesh(field, i, j)
    with open(path, "w", encoding="utf-8") as f:
        f.write("theta,phi,value,x,y,z\n")
        for a in range(field.theta.size):
            for b in range(field.phi.size):
                row = (
                    field.theta[a],
                    field.phi[b],
                    field.values[a, b, i, j],
                    x[a, b],
                    y[a, b],
                    z[a, b],
                )
                f.write(",".join(f"{v:.17g}" for v in row) + "\n")


def export_field_mesh(field: SphereField, i: int, j: int, path) -> None:
    """Wavefront-style triangle mesh of the amplitude plot (wraps in azimuth)."""
    _, x, y, z = spherical_plot_mesh(field, i, j)
    nt, np_ = x.shape
    with open(path, "w", encoding="utf-8") as f:
        for a in range(nt):
            for b in range(np_):
                f.write(f"v {x[a, b]:.9g} {y[a, b]:.9g} {z[a, b]:.9g}\n")
        for a in range(nt - 1):
            for b in range(np_):
                b2 = (b + 1) % np_
                v00 = a * np_ + b + 1
                v01 = a * np_ + b2 + 1
                v10 = (a + 1) * np_ + b + 1
                v11 = (a + 1) * np_ + b2 + 1
                f.write(f"f {v00} {v10} {v11}\n")
                f.write(f"f {v00} {v11} {v01}\n")
