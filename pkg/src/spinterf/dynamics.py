"""Spectral time evolution.

A Hermitian operator is diagonalised once; ``U(t)`` and selected matrix
elements are then available at any time by re-phasing the eigenvectors.
Degenerate eigenvalues need no special treatment since only functions of H
are ever formed.

All propagators are reported in the vacuum-rotating gauge: when the vacuum
(basis index 0 in both supported bases) is an exact eigenstate with energy
``E_vac``, ``U(t)`` is multiplied by ``exp(+i E_vac t)`` so that the vacuum
amplitude stays 1 and the phases of the transfer amplitudes are measured
relative to it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonians import Basis, HermitianOperator, hermiticity_residual, site_index

__all__ = [
    "SpectralPropagator",
    "TransferAmplitudes",
    "decompose",
    "evolve",
    "matrix_elements",
    "amplitudes",
    "default_time_step",
    "time_grid",
]

VACUUM_ISOLATION_ATOL = 1e-12


@dataclass(frozen=True)
class SpectralPropagator:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    gauge_energy: float = 0.0
    n_sites: int | None = None
    basis: Basis | None = None

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def site_index(self, site: int) -> int:
        if self.basis is None or self.n_sites is None:
            raise ValueError("propagator was built from a bare matrix; site states are undefined")
        return site_index(self.n_sites, site, self.basis)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


@dataclass(frozen=True)
class TransferAmplitudes:
    """Matrix elements ``f_ij = <i|U(t)|j>`` between the end-site states.

    Fields may be scalars or numpy arrays of a common shape (one entry per
    time); every measure built on top of this class broadcasts.
    """

    t: float | np.ndarray
    f11: complex | np.ndarray
    f1N: complex | np.ndarray
    fN1: complex | np.ndarray
    fNN: complex | np.ndarray

    @property
    def gamma11(self):
        return np.angle(self.f11)

    @property
    def gamma1N(self):
        return np.angle(self.f1N)

    @property
    def p11(self):
        return np.abs(self.f11) ** 2

    @property
    def p1N(self):
        return np.abs(self.f1N) ** 2

    @classmethod
    def from_values(cls, f11, f1N, fN1=None, fNN=None, t=0.0) -> TransferAmplitudes:
        """Build amplitudes by hand; missing ones follow from mirror symmetry."""
        return cls(t, f11, f1N, f1N if fN1 is None else fN1, f11 if fNN is None else fNN)


def decompose(h: HermitianOperator | np.ndarray) -> SpectralPropagator:
    """Diagonalise ``h`` and fix the vacuum gauge.

    Eigenvalues come back in ascending order (``numpy.linalg.eigh``).
    """
    if isinstance(h, HermitianOperator):
        m, n_sites, basis = h.matrix, h.n_sites, h.basis
    else:
        m = np.asarray(h)
        n_sites = basis = None
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        residual = hermiticity_residual(m)
        if residual > 1e-12:
            raise ValueError(f"operator is not Hermitian (residual {residual:.3e})")
    energies, vectors = np.linalg.eigh(m)
    off_vacuum = np.abs(m[0, 1:]).max(initial=0.0)
    gauge = float(np.real(m[0, 0])) if off_vacuum <= VACUUM_ISOLATION_ATOL else 0.0
    energies.setflags(write=False)
    vectors.setflags(write=False)
    return SpectralPropagator(energies, vectors, gauge, n_sites, basis)


def _phases(sp: SpectralPropagator, times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("times must be finite")
    return np.exp(-1j * np.multiply.outer(t, sp.eigenvalues - sp.gauge_energy))


def evolve(sp: SpectralPropagator, t) -> np.ndarray:
    """Return ``U(t)``; for an array of times the result has shape ``(T, D, D)``."""
    v = sp.eigenvectors
    ph = _phases(sp, t)
    return np.einsum("ak,...k,bk->...ab", v, ph, v.conj(), optimize=True)


def matrix_elements(sp: SpectralPropagator, rows, cols, times) -> np.ndarray:
    """``<rows|U(t)|cols>`` without forming the full propagator.

    Returns shape ``times.shape + (len(rows), len(cols))``.
    """
    v = sp.eigenvectors
    left = v[np.asarray(rows)]
    right = v[np.asarray(cols)].conj()
    return np.einsum("ak,...k,bk->...ab", left, _phases(sp, times), right, optimize=True)


def amplitudes(sp: SpectralPropagator, t) -> TransferAmplitudes:
    """Transfer amplitudes between site 1 and site N at time(s) ``t``."""
    if sp.n_sites is None:
        raise ValueError("propagator has no site structure; build it from a HermitianOperator")
    i1, iN = sp.site_index(1), sp.site_index(sp.n_sites)
    m = matrix_elements(sp, [i1, iN], [i1, iN], t)
    return TransferAmplitudes(
        t=t if np.ndim(t) == 0 else np.asarray(t, dtype=float),
        f11=m[..., 0, 0],
        f1N=m[..., 0, 1],
        fN1=m[..., 1, 0],
        fNN=m[..., 1, 1],
    )


def default_time_step(sp: SpectralPropagator) -> float:
    """Largest step for which the fastest gauge phase advances by less than pi/20."""
    e_max = np.abs(sp.eigenvalues - sp.gauge_energy).max()
    if e_max == 0:
        return np.inf
    return float(np.pi / 20 / e_max) * (1 - 1e-9)


def time_grid(sp: SpectralPropagator, t_max: float, n_steps: int | None = None) -> np.ndarray:
    """Uniform grid on ``[0, t_max]``.

    ``n_steps`` counts grid points.  When omitted it is chosen so that the
    step satisfies :func:`default_time_step`.
    """
    if not np.isfinite(t_max) or t_max <= 0:
        raise ValueError(f"t_max must be positive and finite, got {t_max}")
    if n_steps is None:
        n_steps = max(2, int(np.ceil(t_max / default_time_step(sp))) + 1)
    if n_steps < 2:
        raise ValueError(f"n_steps must be >= 2, got {n_steps}")
    return np.linspace(0.0, t_max, n_steps)
