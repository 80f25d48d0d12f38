"""Chain Hamiltonians as dense Hermitian matrices.

Two representations are supported:

* the single-excitation sector ``{|vac>, |1>, ..., |N>}`` of dimension N + 1
  (vacuum first, then the excitation on site 1..N), valid whenever the
  Hamiltonian conserves the number of excitations;
* the full 2**N computational product basis, with site 1 the most
  significant bit of the basis index.

Pauli convention: ``sigma_z |0> = +|0>`` and ``sigma_z |1> = -|1>``, where
``|1>`` is an excitation.  With ``H = ... - sum_i B_i sigma_z_i`` a positive
field therefore costs ``2 B`` per excitation.  Units have hbar = 1.

All four models share the generic nearest-neighbour form::

    H = - sum_b [Jxy_b (XX + YY) + Jz_b ZZ] - sum_i (Delta X_i + B_i Z_i)

and differ only in how the bond couplings are chosen.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "FULL_SPACE_MAX_SITES",
    "HERMITIAN_ATOL",
    "Model",
    "Basis",
    "ChainSpec",
    "HermitianOperator",
    "build_single_excitation",
    "build_full_space",
    "total_sz",
    "site_index",
]

FULL_SPACE_MAX_SITES = 12
HERMITIAN_ATOL = 1e-12


class Model(str, enum.Enum):
    HEISENBERG_UNIFORM = "heisenberg"
    XY_WEAK_ENDS = "xy-weak-ends"
    FLUX_QUBIT = "flux-qubit"
    XY_ISING = "xy-ising"


class Basis(str, enum.Enum):
    SINGLE_EXCITATION = "single-excitation"
    FULL = "full"


@dataclass(frozen=True)
class ChainSpec:
    """Declarative description of a chain.

    Only the couplings relevant to ``model`` are read:

    ========================  ==========================================
    ``HEISENBERG_UNIFORM``    ``j`` (XX + YY + ZZ on every bond)
    ``XY_WEAK_ENDS``          ``j`` and ``a`` (first/last bond = a*j)
    ``FLUX_QUBIT``            ``j_xy``, ``j_z``, ``delta``
    ``XY_ISING``              ``j_xy``, ``j_z``
    ========================  ==========================================

    ``b_fields`` may be a scalar (uniform field) or a length-N sequence and
    applies to every model.
    """

    model: Model
    n_sites: int
    j: float = 1.0
    a: float = 0.02
    j_xy: float = 1.0
    j_z: float = 0.05
    delta: float = 0.0
    b_fields: float | tuple[float, ...] = 0.0

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        if isinstance(self.b_fields, (list, tuple, np.ndarray)):
            object.__setattr__(self, "b_fields", tuple(float(b) for b in self.b_fields))
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ValueError(f"n_sites must be an integer >= 2, got {self.n_sites!r}")
        couplings = (self.j, self.a, self.j_xy, self.j_z, self.delta)
        if not all(np.isfinite(c) for c in couplings):
            raise ValueError("all couplings must be finite")
        if not 0.0 < self.a <= 1.0:
            raise ValueError(f"end-coupling ratio a must lie in (0, 1], got {self.a}")
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if isinstance(self.b_fields, tuple):
            if len(self.b_fields) != self.n_sites:
                raise ValueError(
                    f"b_fields has length {len(self.b_fields)}, expected n_sites={self.n_sites}"
                )
            if not all(np.isfinite(self.b_fields)):
                raise ValueError("b_fields must be finite")
        elif not np.isfinite(self.b_fields):
            raise ValueError("b_fields must be finite")

    @classmethod
    def heisenberg(cls, n_sites: int, j: float = 1.0, b=0.0) -> ChainSpec:
        return cls(Model.HEISENBERG_UNIFORM, n_sites, j=j, b_fields=b)

    @classmethod
    def weak_ends(cls, n_sites: int, a: float = 0.02, j: float = 1.0, b=0.0) -> ChainSpec:
        return cls(Model.XY_WEAK_ENDS, n_sites, j=j, a=a, b_fields=b)

    @classmethod
    def flux_qubit(
        cls, n_sites: int = 3, delta: float = 0.0, j_z: float = 1.0, j_xy: float = 0.08, b=0.0
    ) -> ChainSpec:
        return cls(Model.FLUX_QUBIT, n_sites, j_xy=j_xy, j_z=j_z, delta=delta, b_fields=b)

    @classmethod
    def xy_ising(cls, n_sites: int, j_xy: float = 1.0, j_z: float = 0.05, b=0.0) -> ChainSpec:
        return cls(Model.XY_ISING, n_sites, j_xy=j_xy, j_z=j_z, b_fields=b)

    @property
    def conserves_excitations(self) -> bool:
        return not (self.model is Model.FLUX_QUBIT and self.delta > 0)

    @property
    def time_unit(self) -> float:
        """Energy scale whose inverse is the natural time unit."""
        if self.model in (Model.HEISENBERG_UNIFORM, Model.XY_WEAK_ENDS):
            return abs(self.j)
        return abs(self.j_xy)

    def fields(self) -> np.ndarray:
        if isinstance(self.b_fields, tuple):
            return np.array(self.b_fields, dtype=float)
        return np.full(self.n_sites, float(self.b_fields))

    def bond_couplings(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(jxy, jz)`` arrays of length N - 1; bond b joins sites b+1 and b+2."""
        nb = self.n_sites - 1
        if self.model is Model.HEISENBERG_UNIFORM:
            return np.full(nb, self.j), np.full(nb, self.j)
        if self.model is Model.XY_WEAK_ENDS:
            jxy = np.full(nb, self.j)
            jxy[0] = jxy[-1] = self.a * self.j
            return jxy, np.zeros(nb)
        return np.full(nb, self.j_xy), np.full(nb, self.j_z)

    def with_fields(self, b) -> ChainSpec:
        return replace(self, b_fields=b)

    def with_delta(self, delta: float) -> ChainSpec:
        return replace(self, delta=delta)


@dataclass(frozen=True)
class HermitianOperator:
    """Dense Hermitian matrix tagged with the basis it is written in."""

    matrix: np.ndarray
    n_sites: int
    basis: Basis = Basis.SINGLE_EXCITATION
    spec: ChainSpec | None = field(default=None, compare=False)

    def __post_init__(self):
        m = np.array(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        residual = hermiticity_residual(m)
        if residual > HERMITIAN_ATOL:
            raise ValueError(f"operator is not Hermitian (residual {residual:.3e})")
        expected = self.n_sites + 1 if self.basis is Basis.SINGLE_EXCITATION else 2**self.n_sites
        if m.shape[0] != expected:
            raise ValueError(
                f"{self.basis.value} operator for N={self.n_sites} must have dim {expected}, "
                f"got {m.shape[0]}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def hermiticity_residual(m: np.ndarray) -> float:
    return float(np.abs(m - m.conj().T).max(initial=0.0))


def site_index(n_sites: int, site: int, basis: Basis | str) -> int:
    """Basis index of the state with a single excitation on ``site`` (1-based)."""
    if not 1 <= site <= n_sites:
        raise ValueError(f"site must be in 1..{n_sites}, got {site}")
    if Basis(basis) is Basis.SINGLE_EXCITATION:
        return site
    return 1 << (n_sites - site)


def build_single_excitation(spec: ChainSpec) -> HermitianOperator:
    """Hamiltonian restricted to the vacuum plus single-excitation states.

    Returns the (N+1) x (N+1) matrix in the order ``|vac>, |1>, ..., |N>``.
    Hopping between neighbouring sites carries ``-2 Jxy_b`` because
    ``XX + YY`` exchanges ``|01>`` and ``|10>`` with amplitude 2.
    """
    if not spec.conserves_excitations:
        raise ValueError(
            "FluxQubit with delta != 0 does not conserve excitations; use build_full_space"
        )
    n = spec.n_sites
    jxy, jz = spec.bond_couplings()
    b = spec.fields()

    h = np.zeros((n + 1, n + 1))
    h[0, 0] = -jz.sum() - b.sum()
    for site in range(1, n + 1):
        s = np.ones(n)
        s[site - 1] = -1.0
        h[site, site] = -(jz * s[:-1] * s[1:]).sum() - (b * s).sum()
    for bond in range(n - 1):
        h[bond + 1, bond + 2] = h[bond + 2, bond + 1] = -2.0 * jxy[bond]
    return HermitianOperator(h, n, Basis.SINGLE_EXCITATION, spec)


def build_full_space(spec: ChainSpec, max_sites: int = FULL_SPACE_MAX_SITES) -> HermitianOperator:
    """Hamiltonian on the full 2**N product space (site 1 = most significant bit)."""
    n = spec.n_sites
    if n > max_sites:
        raise ValueError(
            f"full-space construction for N={n} needs a dense {2**n}x{2**n} matrix; "
            f"the cap is N <= {max_sites} (pass max_sites to raise it)"
        )
    dim = 1 << n
    jxy, jz = spec.bond_couplings()
    b = spec.fields()

    states = np.arange(dim)
    # bits[:, i] is the occupation of site i+1
    bits = (states[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    s = 1 - 2 * bits

    h = np.zeros((dim, dim))
    h[states, states] = -(s[:, :-1] * s[:, 1:] * jz).sum(axis=1) - (s * b).sum(axis=1)
    for bond in range(n - 1):
        differ = bits[:, bond] != bits[:, bond + 1]
        src = states[differ]
        mask = (1 << (n - 1 - bond)) | (1 << (n - 2 - bond))
        h[src ^ mask, src] += -2.0 * jxy[bond]
    if spec.model is Model.FLUX_QUBIT and spec.delta != 0:
        for site in range(n):
            h[states ^ (1 << (n - 1 - site)), states] += -spec.delta
    return HermitianOperator(h, n, Basis.FULL, spec)


def total_sz(n_sites: int, basis: Basis | str = Basis.FULL) -> np.ndarray:
    """Diagonal of ``S^z = sum_i sigma_z_i`` in the requested basis."""
    if Basis(basis) is Basis.SINGLE_EXCITATION:
        out = np.full(n_sites + 1, n_sites - 2.0)
        out[0] = n_sites
        return np.diag(out)
    states = np.arange(1 << n_sites)
    bits = (states[:, None] >> np.arange(n_sites)[None, :]) & 1
    return np.diag((n_sites - 2 * bits.sum(axis=1)).astype(float))

