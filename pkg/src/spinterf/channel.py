"""Reduced propagator of the two end spins.

The chain is treated as a black box acting on spins 1 and N.  The interior
starts in the all-down state and is traced out at the end, so the map
``rho -> rho'`` on the end spins is a linear map (a quantum channel)::

    rho'[i, j] = sum_{k, l} P[i, j, k, l] * rho[k, l]

Two reduced bases are used:

* ``d = 3`` for excitation-conserving chains: ``(|0>_r, |1>, |N>)`` where
  ``|0>_r`` has both end spins down, ``|1>`` has spin 1 up and ``|N>`` has
  spin N up.  Ordering the pair index ``(i, j)`` row-major gives the slots
  ``00, 01, 0N, 10, 11, 1N, N0, N1, NN``.
* ``d = 4`` for the general two-spin space ``|s_1 s_N>`` ordered
  ``00, 01, 10, 11`` with spin 1 the major index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dynamics import SpectralPropagator, matrix_elements
from .hamiltonians import FULL_SPACE_MAX_SITES, Basis

__all__ = [
    "BASIS_LABELS",
    "CONSERVING_TO_TWO_SPIN",
    "PropagatorTensor",
    "reduced_propagator_conserving",
    "reduced_propagator_numeric",
    "apply",
    "identity_channel",
    "unitary_channel",
    "embed_conserving",
    "restrict_to_conserving",
    "choi_matrix",
    "partial_trace_interior",
    "end_spin_state",
]

BASIS_LABELS = {3: ("0", "1", "N"), 4: ("00", "01", "10", "11")}

# index of (|0>_r, |1>, |N>) inside the two-spin basis (00, 01, 10, 11)
CONSERVING_TO_TWO_SPIN = (0, 2, 1)

DENSITY_ATOL = 1e-9


@dataclass(frozen=True)
class PropagatorTensor:
    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=complex)
        d = e.shape[0]
        if e.shape != (d, d, d, d) or d not in BASIS_LABELS:
            raise ValueError(f"propagator tensor must have shape (d,)*4 with d in (3, 4), got {e.shape}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def labels(self) -> tuple[str, ...]:
        return BASIS_LABELS[self.d]

    def as_matrix(self) -> np.ndarray:
        """d^2 x d^2 superoperator with row index (i, j) and column index (k, l)."""
        d = self.d
        return self.entries.reshape(d * d, d * d)

    def trace_residual(self) -> float:
        d = self.d
        traced = np.einsum("iikl->kl", self.entries)
        return float(np.abs(traced - np.eye(d)).max())

    def hermiticity_residual(self) -> float:
        return float(np.abs(self.entries - self.entries.transpose(1, 0, 3, 2).conj()).max())

    def to_json(self) -> str:
        d = self.d
        flat = self.entries.reshape(-1)
        return json.dumps(
            {
                "shape": [d, d, d, d],
                "index_order": "P[i][j][k][l]: rho_out[i,j] = sum_kl P[i,j,k,l] rho_in[k,l]",
                "basis": list(self.labels),
                "layout": "row-major",
                "entries": [[float(z.real), float(z.imag)] for z in flat],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> PropagatorTensor:
        data = json.loads(text)
        pairs = np.asarray(data["entries"], dtype=float)
        entries = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(data["shape"])
        tensor = cls(entries)
        if list(tensor.labels) != list(data.get("basis", tensor.labels)):
            raise ValueError(f"basis labels {data['basis']} do not match d={tensor.d}")
        return tensor


def identity_channel(d: int = 3) -> PropagatorTensor:
    eye = np.eye(d)
    return PropagatorTensor(np.einsum("ik,jl->ijkl", eye, eye))


def unitary_channel(u: np.ndarray) -> PropagatorTensor:
    """``P[i,j,k,l] = U[i,k] conj(U[j,l])``."""
    u = np.asarray(u)
    return PropagatorTensor(np.einsum("ik,jl->ijkl", u, u.conj()))


def reduced_propagator_conserving(sp: SpectralPropagator, n_sites: int, t: float) -> PropagatorTensor:
    """Analytic d = 3 channel of an excitation-conserving chain.

    Built from the single-excitation propagator: with ``c_x = <x|U|k>`` the
    output amplitudes, the vacuum keeps amplitude 1 (gauge), coherences with
    the vacuum pick up ``f_xk`` or its conjugate, and the population leaking
    into interior sites lands on ``|0>_r`` through the interior sums
    ``sum_j f_jk conj(f_jl)`` over j = 2..N-1.
    """
    if sp.basis is not Basis.SINGLE_EXCITATION or sp.dim != n_sites + 1:
        raise ValueError(
            f"expected a single-excitation propagator of dim {n_sites + 1}, got dim {sp.dim}"
        )
    ends = [1, n_sites]
    interior = list(range(2, n_sites))
    f = matrix_elements(sp, ends, ends, t)  # f[x, k] = <x|U|k>
    if interior:
        g = matrix_elements(sp, interior, ends, t)
        leak = g.T @ g.conj()  # leak[k, l] = sum_j f_jk conj(f_jl)
    else:
        leak = np.zeros((2, 2), dtype=complex)

    p = np.zeros((3, 3, 3, 3), dtype=complex)
    p[0, 0, 0, 0] = 1.0
    p[0, 0, 1:, 1:] = leak
    p[1:, 0, 1:, 0] = f
    p[0, 1:, 0, 1:] = f.conj()
    p[1:, 1:, 1:, 1:] = np.einsum("ik,jl->ijkl", f, f.conj())
    return PropagatorTensor(p)


def partial_trace_interior(psi: np.ndarray, n_sites: int) -> np.ndarray:
    """Reduced 4x4 density matrix of spins 1 and N for a pure full-space state."""
    t = np.asarray(psi).reshape(2, -1, 2)
    return np.einsum("amb,cmd->abcd", t, t.conj()).reshape(4, 4)


def end_spin_state(n_sites: int, s1: int, sN: int) -> int:
    """Full-space index of ``|s1, 0...0, sN>``."""
    return (s1 << (n_sites - 1)) | sN


def reduced_propagator_numeric(
    full_sp: SpectralPropagator,
    n_sites: int,
    t: float,
    max_sites: int = FULL_SPACE_MAX_SITES,
) -> PropagatorTensor:
    """d = 4 channel from the full 2**N propagator.

    Each reduced basis operator ``|k><l|`` is embedded with the interior in
    the all-down state, evolved as ``U (.) U^dag`` and the interior traced
    out.  Since the embedded operator is ``|psi_k><psi_l|``, only the four
    columns ``U|psi_k>`` are needed.
    """
    if n_sites > max_sites:
        raise ValueError(f"N={n_sites} exceeds the full-space cap N <= {max_sites}")
    if full_sp.dim != 2**n_sites:
        raise ValueError(f"expected a full-space propagator of dim {2**n_sites}, got {full_sp.dim}")
    cols = [end_spin_state(n_sites, s1, sN) for s1 in (0, 1) for sN in (0, 1)]
    rows = np.arange(full_sp.dim)
    out = matrix_elements(full_sp, rows, cols, t)  # (2^N, 4)
    psi = out.T.reshape(4, 2, -1, 2)
    p = np.einsum("kamb,lcmd->abcdkl", psi, psi.conj()).reshape(4, 4, 4, 4)
    return PropagatorTensor(p)


def apply(p: PropagatorTensor, rho: np.ndarray, check: bool = True) -> np.ndarray:
    """Propagate a density matrix through the channel."""
    rho = np.asarray(rho)
    if rho.shape != (p.d, p.d):
        raise ValueError(f"density matrix must be {p.d}x{p.d}, got {rho.shape}")
    if check:
        _check_density(rho)
    return np.einsum("ijkl,kl->ij", p.entries, rho)


def _check_density(rho: np.ndarray) -> None:
    if np.abs(rho - rho.conj().T).max() > DENSITY_ATOL:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > DENSITY_ATOL:
        raise ValueError(f"density matrix trace is {np.trace(rho).real:.12g}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -DENSITY_ATOL:
        raise ValueError("density matrix is not positive semidefinite")


def embed_conserving(p: PropagatorTensor) -> PropagatorTensor:
    """Lift a d = 3 tensor into the two-spin (d = 4) basis; |11> is left unmapped."""
    if p.d != 3:
        raise ValueError("embed_conserving expects a d = 3 tensor")
    idx = np.array(CONSERVING_TO_TWO_SPIN)
    out = np.zeros((4, 4, 4, 4), dtype=complex)
    out[np.ix_(idx, idx, idx, idx)] = p.entries
    return PropagatorTensor(out)


def restrict_to_conserving(p: PropagatorTensor) -> PropagatorTensor:
    """Restrict a d = 4 tensor to the (|0>_r, |1>, |N>) sub-basis."""
    if p.d != 4:
        raise ValueError("restrict_to_conserving expects a d = 4 tensor")
    idx = np.array(CONSERVING_TO_TWO_SPIN)
    return PropagatorTensor(p.entries[np.ix_(idx, idx, idx, idx)])


def choi_matrix(p: PropagatorTensor) -> np.ndarray:
    """Choi matrix ``C[(i,k),(j,l)] = P[i,j,k,l]``; positive semidefinite iff P is CP."""
    d = p.d
    return p.entries.transpose(0, 2, 1, 3).reshape(d * d, d * d)

