import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import conserving_specs, expm_propagator, kron_hamiltonian, times
from spinterf.dynamics import (
    TransferAmplitudes,
    amplitudes,
    decompose,
    default_time_step,
    evolve,
    matrix_elements,
    time_grid,
)
from spinterf.hamiltonians import ChainSpec, build_full_space, build_single_excitation


def test_two_level_eigenvalues():
    sp = decompose(np.array([[0.0, -2.0], [-2.0, 0.0]]))
    np.testing.assert_allclose(sp.eigenvalues, [-2.0, 2.0], atol=1e-14)


def test_heisenberg_three_sites_characteristic_polynomial():
    # site block [[0,-2,0],[-2,2,-2],[0,-2,0]] has det(M - x) = -x (x - 4)(x + 2);
    # the vacuum sits at -J (N - 1) * 1 = -2
    sp = decompose(build_single_excitation(ChainSpec.heisenberg(3, j=1.0)))
    np.testing.assert_allclose(sp.eigenvalues, [-2.0, -2.0, 0.0, 4.0], atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(conserving_specs(max_n=8))
def test_decomposition_contract(spec):
    h = build_single_excitation(spec)
    sp = decompose(h)
    assert np.all(np.diff(sp.eigenvalues) >= 0)
    v = sp.eigenvectors
    assert np.abs(v.conj().T @ v - np.eye(sp.dim)).max() < 1e-10
    scale = max(np.linalg.norm(h.matrix), 1.0)
    assert np.linalg.norm(sp.reconstruct() - h.matrix) / scale < 1e-9
    assert sp.gauge_energy == h.matrix[0, 0]


def test_gauge_zero_when_vacuum_not_eigenstate():
    sp = decompose(build_full_space(ChainSpec.flux_qubit(3, delta=0.2)))
    assert sp.gauge_energy == 0.0


def test_non_hermitian_rejected():
    with pytest.raises(ValueError, match="not Hermitian"):
        decompose(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_identity_at_zero():
    sp = decompose(build_single_excitation(ChainSpec.heisenberg(6, b=0.3)))
    np.testing.assert_allclose(evolve(sp, 0.0), np.eye(7), atol=1e-13)


def test_two_site_rabi_transfer():
    sp = decompose(build_single_excitation(ChainSpec.weak_ends(2, a=1.0, j=1.0)))
    ts = np.linspace(0, 3, 31)
    np.testing.assert_allclose(np.abs(amplitudes(sp, ts).f1N), np.abs(np.sin(2 * ts)), atol=1e-12)
    assert abs(abs(amplitudes(sp, np.pi / 4).f1N) - 1) < 1e-12


@settings(max_examples=30, deadline=None)
@given(conserving_specs(max_n=6), times, times)
def test_group_property(spec, t1, t2):
    sp = decompose(build_single_excitation(spec))
    lhs = evolve(sp, t1) @ evolve(sp, t2)
    np.testing.assert_allclose(lhs, evolve(sp, t1 + t2), atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(conserving_specs(max_n=5), times)
def test_matches_expm_in_vacuum_gauge(spec, t):
    h = build_single_excitation(spec)
    sp = decompose(h)
    expected = expm_propagator(h.matrix, t, gauge=h.matrix[0, 0])
    np.testing.assert_allclose(evolve(sp, t), expected, atol=1e-9)
    assert abs(evolve(sp, t)[0, 0] - 1) < 1e-12


@settings(max_examples=30, deadline=None)
@given(conserving_specs(max_n=8), st.lists(times, min_size=1, max_size=5))
def test_unitarity_and_probability_sum(spec, ts):
    sp = decompose(build_single_excitation(spec))
    u = evolve(sp, np.array(ts))
    gram = np.einsum("tki,tkj->tij", u.conj(), u)
    assert np.abs(gram - np.eye(sp.dim)).max() < 1e-9
    assert np.abs((np.abs(u[:, :, 1]) ** 2).sum(axis=1) - 1).max() < 1e-9


@settings(max_examples=30, deadline=None)
@given(conserving_specs(max_n=6), times)
def test_energy_conserved(spec, t):
    h = build_single_excitation(spec)
    sp = decompose(h)
    rng = np.random.default_rng(1)
    psi0 = rng.normal(size=sp.dim) + 1j * rng.normal(size=sp.dim)
    psi0 /= np.linalg.norm(psi0)
    psi = evolve(sp, t) @ psi0
    e0 = np.vdot(psi0, h.matrix @ psi0).real
    assert abs(np.vdot(psi, h.matrix @ psi).real - e0) < 1e-9 * max(1.0, abs(e0))


def test_amplitudes_at_zero():
    a = amplitudes(decompose(build_single_excitation(ChainSpec.xy_ising(5))), 0.0)
    assert abs(a.f11 - 1) < 1e-12 and abs(a.fNN - 1) < 1e-12
    assert abs(a.f1N) < 1e-12 and abs(a.fN1) < 1e-12


@settings(max_examples=30, deadline=None)
@given(conserving_specs(max_n=8, uniform_fields=True), times)
def test_mirror_symmetric_amplitudes(spec, t):
    a = amplitudes(decompose(build_single_excitation(spec)), t)
    assert abs(a.f1N - a.fN1) < 1e-10
    assert abs(a.f11 - a.fNN) < 1e-10


def test_uniform_field_changes_only_phase():
    ts = np.linspace(0, 30, 301)
    a0 = amplitudes(decompose(build_single_excitation(ChainSpec.heisenberg(7, b=0.0))), ts)
    a1 = amplitudes(decompose(build_single_excitation(ChainSpec.heisenberg(7, b=0.8))), ts)
    np.testing.assert_allclose(np.abs(a1.f1N), np.abs(a0.f1N), atol=1e-12)
    np.testing.assert_allclose(np.abs(a1.f11), np.abs(a0.f11), atol=1e-12)
    # one excitation picks up exp(-2iBt) relative to the vacuum
    np.testing.assert_allclose(a1.f1N, a0.f1N * np.exp(-2j * 0.8 * ts), atol=1e-10)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_full_space_amplitudes_match_single_excitation_at_zero_delta(n):
    spec = ChainSpec.flux_qubit(n, delta=0.0)
    single = decompose(build_single_excitation(spec))
    full = decompose(build_full_space(spec))
    ts = np.linspace(0, 25, 17)
    a, b = amplitudes(single, ts), amplitudes(full, ts)
    for name in ("f11", "f1N", "fN1", "fNN"):
        np.testing.assert_allclose(getattr(b, name), getattr(a, name), atol=1e-10)


def test_full_space_amplitudes_match_kron_expm():
    spec = ChainSpec.flux_qubit(3, delta=0.3)
    sp = decompose(build_full_space(spec))
    u = expm_propagator(kron_hamiltonian(spec), 4.2)
    a = amplitudes(sp, 4.2)
    assert abs(a.f1N - u[0b100, 0b001]) < 1e-10
    assert abs(a.f11 - u[0b100, 0b100]) < 1e-10


def test_matrix_elements_shape():
    sp = decompose(build_single_excitation(ChainSpec.heisenberg(4)))
    assert matrix_elements(sp, [1, 2], [3], np.zeros(5)).shape == (5, 2, 1)


def test_amplitudes_need_site_structure():
    with pytest.raises(ValueError):
        amplitudes(decompose(np.eye(3)), 1.0)


def test_transfer_amplitude_phases():
    a = TransferAmplitudes.from_values(0.5j, -0.5)
    assert a.gamma11 == pytest.approx(np.pi / 2)
    assert a.gamma1N == pytest.approx(np.pi)
    assert a.fNN == a.f11 and a.fN1 == a.f1N


def test_default_grid_resolves_fastest_phase():
    sp = decompose(build_single_excitation(ChainSpec.heisenberg(10, b=0.5)))
    grid = time_grid(sp, 20.0)
    step = grid[1] - grid[0]
    assert step * np.abs(sp.eigenvalues - sp.gauge_energy).max() < np.pi / 20
    assert step <= default_time_step(sp)
    assert grid[0] == 0 and grid[-1] == 20.0
    assert len(time_grid(sp, 20.0, 11)) == 11
    with pytest.raises(ValueError):
        time_grid(sp, 20.0, 1)
