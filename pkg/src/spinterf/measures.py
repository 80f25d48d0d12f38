"""Interference and fidelity measures.

``interference`` works on any reduced propagator tensor.  For a unitary the
same quantity collapses to ``D - sum |U_ik|^4``; ``interference_unitary``
evaluates that form and normalises it by ``D - 1`` so that an
equipartitioning unitary scores exactly 1.

For excitation-conserving chains both the reduced interference and the
average transfer fidelity have closed forms in the transfer amplitudes.
The tensor route stays the reference for chains without mirror symmetry.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import qmc

from .channel import PropagatorTensor, embed_conserving
from .dynamics import SpectralPropagator, TransferAmplitudes, amplitudes, evolve
from .errors import NumericalContractError

__all__ = [
    "NotUnitaryError",
    "MeasureSample",
    "measure_sample",
    "FidelityEstimate",
    "interference",
    "interference_unitary",
    "reduced_interference_closed",
    "fidelity",
    "pairwise_fidelity",
    "fidelity_exact",
    "fidelity_numeric",
    "CLASSICAL_FIDELITY",
]

CLASSICAL_FIDELITY = 2.0 / 3.0
UNITARY_ATOL = 1e-8


class NotUnitaryError(NumericalContractError):
    pass


@dataclass(frozen=True)
class MeasureSample:
    t: float
    fidelity: float
    i_reduced: float
    i_full_normalized: float
    p11: float
    p1N: float


class FidelityEstimate(NamedTuple):
    mean: float
    stderr: float


def interference(p: PropagatorTensor) -> float:
    """Interference of a propagator.

    ``I = sum_{i,k,l} |P_ii,kl|^2 - sum_{i,k} |P_ii,kk|^2``, evaluated as the
    sum over ``k != l`` directly so round-off cannot make it negative.
    """
    d = p.d
    diag = np.abs(p.entries[np.arange(d), np.arange(d)]) ** 2  # (i, k, l)
    value = float(diag.sum() - np.einsum("ikk->", diag))
    return max(value, 0.0)


def interference_unitary(u: np.ndarray, normalized: bool = True, check: bool = True):
    """Interference of a unitary, ``D - sum_ik |U_ik|^4``.

    Accepts a stack of unitaries (leading axes are broadcast).  With
    ``normalized`` the result is divided by ``D - 1``.
    """
    u = np.asarray(u)
    d = u.shape[-1]
    if u.shape[-2] != d:
        raise ValueError(f"unitary must be square, got shape {u.shape}")
    if check:
        gram = np.einsum("...ki,...kj->...ij", u.conj(), u)
        residual = np.abs(gram - np.eye(d)).max()
        if residual > UNITARY_ATOL:
            raise NotUnitaryError(f"matrix is not unitary (residual {residual:.3e})")
    p2 = np.abs(u) ** 2
    value = d - (p2 * p2).sum(axis=(-2, -1))
    if normalized:
        value = value / (d - 1)
    return np.maximum(value, 0.0)


def reduced_interference_closed(amps: TransferAmplitudes, symmetric: bool = True):
    """Reduced interference of a conserving chain from its transfer amplitudes.

    With ``symmetric`` the mirror-symmetric form
    ``4 |f11|^2 |f1N|^2 (1 + 2 cos^2(gamma11 - gamma1N))`` is used.  Otherwise
    the interior leakage sum is eliminated with the completeness relation
    ``sum_j conj(f_jN) f_j1 = 0``, which leaves::

        2 |f11 conj(f1N) + fN1 conj(fNN)|^2 + 2 |f11 f1N|^2 + 2 |fN1 fNN|^2
    """
    if symmetric:
        dg = amps.gamma11 - amps.gamma1N
        return 4 * amps.p11 * amps.p1N * (1 + 2 * np.cos(dg) ** 2)
    cross = amps.f11 * np.conj(amps.f1N) + amps.fN1 * np.conj(amps.fNN)
    return (
        2 * np.abs(cross) ** 2
        + 2 * np.abs(amps.f11 * amps.f1N) ** 2
        + 2 * np.abs(amps.fN1 * amps.fNN) ** 2
    )


def pairwise_fidelity(f):
    """Phase-aligned fidelity ``|f|/3 + |f|^2/6 + 1/2`` of one transfer amplitude."""
    m = np.abs(f)
    return m / 3 + m**2 / 6 + 0.5


def fidelity(amps: TransferAmplitudes, align_phase: bool = True):
    """Bloch-sphere averaged fidelity of the transfer from site 1 to site N.

    ``align_phase`` assumes the local fields have been tuned so the transfer
    amplitude is real and positive; otherwise its computed phase (in the
    vacuum gauge) enters through ``cos(gamma)``.  The amplitude used is
    ``fN1 = <N|U|1>``; it equals ``f1N`` for every real Hamiltonian built here.
    """
    if align_phase:
        return pairwise_fidelity(amps.fN1)
    m = np.abs(amps.fN1)
    return m * np.cos(np.angle(amps.fN1)) / 3 + m**2 / 6 + 0.5


def _output_overlap_tensor(p: PropagatorTensor) -> np.ndarray:
    """``Q[b, d, a, c]``: spin-N output element (b, d) for spin-1 input |a><c|."""
    if p.d == 3:
        p = embed_conserving(p)
    e = p.entries.reshape(2, 2, 2, 2, 2, 2, 2, 2)  # (s1,b, s1',d, a,0, c,0)
    return np.einsum("sbsdaxcx->bdac", e[:, :, :, :, :, :1, :, :1])


def fidelity_exact(p: PropagatorTensor, align_phase: bool = False) -> float:
    """Exact Bloch-sphere average of the transfer fidelity of a channel.

    Uses the second moment of a uniformly random qubit state,
    ``E[psi_a conj(psi_c) psi_d conj(psi_b)] = (d_ac d_bd + d_ab d_cd) / 6``.

    With ``align_phase`` the output spin is first given the z-rotation that
    maximises the average.  Only the coherence terms depend on that angle,
    as ``c0 + Re(c1 exp(i phi))``, so the optimum is ``c0 + |c1|``.  For an
    excitation-conserving channel this is the same as setting the phase of
    ``f_1N`` to zero.
    """
    q = _output_overlap_tensor(p)
    populations = np.einsum("bbaa->", q).real + q[0, 0, 0, 0].real + q[1, 1, 1, 1].real
    c1 = q[1, 0, 1, 0] + np.conj(q[0, 1, 0, 1])
    coherence = abs(c1) if align_phase else c1.real
    return float((populations + coherence) / 6)


def bloch_states(n_samples: int, seed: int | None = 0, method: str = "sobol") -> np.ndarray:
    """Uniform pure qubit states, shape ``(n, 2)``."""
    if method == "sobol":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)  # n need not be a power of 2
            u = qmc.Sobol(d=2, scramble=True, seed=seed).random(n_samples)
    elif method == "mc":
        u = np.random.default_rng(seed).random((n_samples, 2))
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    cos_theta = 1 - 2 * u[:, 0]
    phi = 2 * np.pi * u[:, 1]
    alpha = np.sqrt((1 + cos_theta) / 2)
    beta = np.sqrt((1 - cos_theta) / 2) * np.exp(1j * phi)
    return np.stack([alpha, beta], axis=1)


def fidelity_numeric(
    p: PropagatorTensor, n_samples: int = 100_000, seed: int | None = 0, method: str = "sobol"
) -> FidelityEstimate:
    """Sampled Bloch-sphere average of the transfer fidelity.

    Each sample prepares a pure state on spin 1 (spin N and the interior
    down), pushes it through ``p``, traces out spin 1 and takes the overlap
    of the spin-N output with the input.  The default sampler is a
    scrambled Sobol sequence; the reported standard error is the plain
    sample estimate, which over-states the error of the quasi-random mean.
    """
    if n_samples < 100:
        raise ValueError(f"n_samples must be >= 100, got {n_samples}")
    psi = bloch_states(n_samples, seed, method)
    q = _output_overlap_tensor(p)
    overlaps = np.einsum(
        "nb,nd,na,nc,bdac->n", psi.conj(), psi, psi, psi.conj(), q, optimize=True
    ).real
    return FidelityEstimate(float(overlaps.mean()), float(overlaps.std(ddof=1) / np.sqrt(n_samples)))


def measure_sample(sp: SpectralPropagator, t: float, symmetric: bool = True) -> MeasureSample:
    """All scalar measures of a single-excitation propagator at one time."""
    amps = amplitudes(sp, t)
    return MeasureSample(
        t=float(t),
        fidelity=float(fidelity(amps)),
        i_reduced=float(reduced_interference_closed(amps, symmetric)),
        i_full_normalized=float(interference_unitary(evolve(sp, t))),
        p11=float(amps.p11),
        p1N=float(amps.p1N),
    )
