import numpy as np
import pytest
import scipy.linalg
from hypothesis import strategies as st

from spinterf.hamiltonians import ChainSpec, Model

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def site_op(op, site, n):
    """Operator acting as ``op`` on ``site`` (1-based, site 1 leftmost factor)."""
    out = np.eye(1)
    for k in range(1, n + 1):
        out = np.kron(out, op if k == site else I2)
    return out


def kron_hamiltonian(spec: ChainSpec) -> np.ndarray:
    """Full-space Hamiltonian assembled term by term from Pauli Kronecker products."""
    n = spec.n_sites
    h = np.zeros((2**n, 2**n), dtype=complex)
    b = spec.fields()
    for i in range(2, n + 1):
        if spec.model is Model.HEISENBERG_UNIFORM:
            jxy = jz = spec.j
        elif spec.model is Model.XY_WEAK_ENDS:
            jxy = spec.a * spec.j if i in (2, n) else spec.j
            jz = 0.0
        else:
            jxy, jz = spec.j_xy, spec.j_z
        h -= jxy * (site_op(X, i, n) @ site_op(X, i - 1, n) + site_op(Y, i, n) @ site_op(Y, i - 1, n))
        h -= jz * site_op(Z, i, n) @ site_op(Z, i - 1, n)
    for i in range(1, n + 1):
        h -= b[i - 1] * site_op(Z, i, n)
        if spec.model is Model.FLUX_QUBIT:
            h -= spec.delta * site_op(X, i, n)
    return h


def single_excitation_basis(n):
    """Columns: full-space vectors of |vac>, |1>, ..., |N>."""
    cols = np.zeros((2**n, n + 1))
    cols[0, 0] = 1
    for j in range(1, n + 1):
        cols[1 << (n - j), j] = 1
    return cols


def expm_propagator(h: np.ndarray, t: float, gauge: float = 0.0) -> np.ndarray:
    return scipy.linalg.expm(-1j * h * t) * np.exp(1j * gauge * t)


def partial_trace_loop(psi: np.ndarray, n: int) -> np.ndarray:
    """4x4 reduced density matrix of spins 1 and N by explicit summation over the interior."""
    m = 2 ** (n - 2)
    rho = np.zeros((4, 4), dtype=complex)
    for a in range(2):
        for b in range(2):
            for c in range(2):
                for d in range(2):
                    acc = 0j
                    for mid in range(m):
                        i = (a << (n - 1)) | (mid << 1) | b
                        j = (c << (n - 1)) | (mid << 1) | d
                        acc += psi[i] * np.conj(psi[j])
                    rho[2 * a + b, 2 * c + d] = acc
    return rho


def random_end_state(rng):
    """Random normalised (a_0, a_1, a_N)."""
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    return v / np.linalg.norm(v)


def embed_end_state(coeffs, n):
    """Full-space vector a_0|0..0> + a_1|1 0..0> + a_N|0..0 1>."""
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = coeffs[0]
    psi[1 << (n - 1)] = coeffs[1]
    psi[1] = coeffs[2]
    return psi


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


couplings = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False).filter(lambda x: abs(x) > 0.05)
fields = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)


@st.composite
def conserving_specs(draw, min_n=2, max_n=7, uniform_fields=False):
    n = draw(st.integers(min_n, max_n))
    model = draw(st.sampled_from([Model.HEISENBERG_UNIFORM, Model.XY_WEAK_ENDS, Model.XY_ISING,
                                  Model.FLUX_QUBIT]))
    if uniform_fields:
        b = draw(fields)
    else:
        b = tuple(draw(st.lists(fields, min_size=n, max_size=n)))
    return ChainSpec(
        model,
        n,
        j=draw(couplings),
        a=draw(st.floats(min_value=0.01, max_value=1.0)),
        j_xy=draw(couplings),
        j_z=draw(couplings),
        delta=0.0,
        b_fields=b,
    )


@st.composite
def any_specs(draw, min_n=2, max_n=5):
    spec = draw(conserving_specs(min_n, max_n))
    if spec.model is Model.FLUX_QUBIT:
        from dataclasses import replace

        spec = replace(spec, delta=draw(st.floats(min_value=0.0, max_value=2.0)))
    return spec


times = st.floats(min_value=0.0, max_value=50.0, allow_nan=False)
