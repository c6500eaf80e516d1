import numpy as np
import pytest

from photonloc.disorder import auxiliary_density
from photonloc.errors import ResonanceError, SingularSolveError
from photonloc.greens import (batched_inverse, gamma_x, green_hat, greens_matrix, greens_via_H,
                              greens_via_K, schur_diagonal, self_energy)
from photonloc.hopping import half_laplacian_kernel
from photonloc.spectral import diagonalize


@pytest.mark.parametrize("z", [-0.4, 1.1, 2.3, 5.5])
def test_two_routes_agree(ham, z):
    H = ham(L=6)
    a = greens_via_K(H, z, (0,))
    b = greens_via_H(H, z, (0,))
    assert np.allclose(a.values, b.values, rtol=1e-10, atol=1e-13)
    assert a.at(H, (2,)) == pytest.approx(b.at(H, (2,)), rel=1e-10)


def test_green_symmetric(ham):
    G = greens_matrix(ham(L=5), 1.7)
    assert np.allclose(G, G.T, atol=1e-12)


@pytest.mark.parametrize("d,L", [(1, 4), (1, 8), (2, 2)])
def test_schur_identity(ham, d, L):
    H = ham(L=L, d=d)
    z = 1.3
    G = greens_matrix(H, z)
    for i in range(H.n_sites):
        assert schur_diagonal(H, z, H.box.site_at(i)) == pytest.approx(G[i, i], rel=1e-10)


def test_schur_with_half_laplacian(ham):
    H = ham(L=5, kernel=half_laplacian_kernel(1))
    G = greens_matrix(H, -0.7)
    assert schur_diagonal(H, -0.7, (0,)) == pytest.approx(G[H.box.origin, H.box.origin], rel=1e-10)


def test_self_energy_ignores_local_density(ham):
    from photonloc.disorder import resample_site
    from photonloc.hamiltonian import assemble_H
    H = ham(L=4)
    fld = resample_site(H.field, (0,), 1.9)
    H2 = assemble_H(H.box, H.kernel, fld, H.g, H.omega)
    assert self_energy(H, 0.8, (0,)) == self_energy(H2, 0.8, (0,))
    assert self_energy(ham(L=0), 0.8, (0,)) == 0.0


def test_guards(ham):
    H = ham(L=3)
    with pytest.raises(ResonanceError):
        greens_via_K(H, H.omega, (0,))
    E = float(np.linalg.eigvalsh(H.matrix)[2])
    with pytest.raises(SingularSolveError) as info:
        greens_via_K(H, E, (0,))
    assert info.value.condition > 1e12


def _nondegenerate_eigs(S, H):
    for c in range(S.n_clusters):
        if S.cluster_sizes()[c] == 1 and abs(S.energies[c] - H.omega) > 1e-3:
            yield c


def test_gamma_at_eigenvalue(ham):
    H = ham(L=4)
    S = diagonalize(H)
    x = (0,)
    i = H.box.index_of(x)
    rho_hat = auxiliary_density(H.field, x)
    g2 = H.g ** 2
    for c in _nondegenerate_eigs(S, H):
        E = float(S.energies[c])
        if abs(S.phi()[c][i, i]) < 1e-6:
            continue
        expect = (g2 * H.rho[i] - g2 * rho_hat) / (E - H.omega)
        assert gamma_x(H, E, x, rho_hat) == pytest.approx(expect, rel=1e-7, abs=1e-9)


def test_phi_transfer(ham):
    H = ham(L=4)
    S = diagonalize(H)
    x = (1,)
    i = H.box.index_of(x)
    rho_hat = 0.37
    g2 = H.g ** 2
    phi = S.phi()
    for c in _nondegenerate_eigs(S, H):
        E = float(S.energies[c])
        if phi[c][i, i] < 1e-6:
            continue
        col = green_hat(H, E, x, rho_hat)
        pred = (g2 * rho_hat - g2 * H.rho[i]) / (E - H.omega) * col * phi[c][i, i]
        assert np.allclose(pred, phi[c][:, i], atol=1e-8)


def test_gamma_derivative_identity(ham):
    H = ham(L=3)
    S = diagonalize(H)
    x = (0,)
    i = H.box.index_of(x)
    rho_hat = 0.8
    g2 = H.g ** 2
    h = 1e-5
    checked = 0
    for c in _nondegenerate_eigs(S, H):
        E = float(S.energies[c])
        phi_xx = S.phi()[c][i, i]
        if phi_xx < 1e-3:
            continue
        dgamma = (gamma_x(H, E + h, x, rho_hat) - gamma_x(H, E - h, x, rho_hat)) / (2 * h)
        lhs = dgamma + (g2 * H.rho[i] - g2 * rho_hat) / (E - H.omega) ** 2
        assert lhs == pytest.approx(1.0 / phi_xx, rel=1e-5)
        checked += 1
    assert checked >= 3


def test_batched_inverse(rng):
    A = rng.normal(size=(6, 4, 4))
    A[3] = 0.0
    A[4, :, 0] = A[4, :, 1]
    inv, ok = batched_inverse(A)
    assert ok.tolist() == [True, True, True, False, False, True]
    for k in np.flatnonzero(ok):
        assert np.allclose(inv[k] @ A[k], np.eye(4), atol=1e-10)
