"""Quick invariant checks run by ``spinterf selftest``."""

from __future__ import annotations

import numpy as np

from . import channel, dynamics, hamiltonians, measures
from .hamiltonians import ChainSpec

TOL = 1e-9


def _chains():
    return [
        ChainSpec.heisenberg(5, b=0.4),
        ChainSpec.weak_ends(6, a=0.1),
        ChainSpec.xy_ising(4),
        ChainSpec.flux_qubit(3, delta=0.0),
    ]


def check_hermitian():
    worst = 0.0
    for spec in _chains() + [ChainSpec.flux_qubit(3, delta=0.3)]:
        h = hamiltonians.build_full_space(spec).matrix
        worst = max(worst, hamiltonians.hermiticity_residual(h))
    return worst < 1e-12, worst


def check_conservation():
    worst = 0.0
    for spec in _chains():
        h = hamiltonians.build_full_space(spec).matrix
        sz = hamiltonians.total_sz(spec.n_sites)
        worst = max(worst, np.abs(h @ sz - sz @ h).max())
    return worst < 1e-12, worst


def check_unitarity_and_sum_rule():
    worst = 0.0
    for spec in _chains():
        sp = dynamics.decompose(hamiltonians.build_single_excitation(spec))
        for t in (0.3, 2.7, 11.0):
            u = dynamics.evolve(sp, t)
            worst = max(worst, np.abs(u.conj().T @ u - np.eye(sp.dim)).max())
            worst = max(worst, abs((np.abs(u[:, 1]) ** 2).sum() - 1))
    return worst < TOL, worst


def check_channel_oracle():
    worst = 0.0
    rng = np.random.default_rng(7)
    for n in (3, 4, 5):
        spec = ChainSpec.heisenberg(n, b=0.2)
        sp = dynamics.decompose(hamiltonians.build_single_excitation(spec))
        full = dynamics.decompose(hamiltonians.build_full_space(spec))
        for t in rng.uniform(0, 10, 3):
            p3 = channel.reduced_propagator_conserving(sp, n, t)
            p4 = channel.reduced_propagator_numeric(full, n, t)
            worst = max(worst, np.abs(channel.restrict_to_conserving(p4).entries - p3.entries).max())
            worst = max(worst, p3.trace_residual(), p4.trace_residual(), p4.hermiticity_residual())
    return worst < TOL, worst


def check_closed_form():
    worst = 0.0
    spec = ChainSpec.weak_ends(6, a=0.1)
    sp = dynamics.decompose(hamiltonians.build_single_excitation(spec))
    for t in np.linspace(0.1, 40, 7):
        p = channel.reduced_propagator_conserving(sp, 6, t)
        closed = measures.reduced_interference_closed(dynamics.amplitudes(sp, t))
        worst = max(worst, abs(measures.interference(p) - closed))
    return worst < 1e-10, worst


def check_field_invariance():
    times = np.linspace(0, 20, 50)
    values = []
    for b in (0.0, 0.7):
        sp = dynamics.decompose(hamiltonians.build_single_excitation(ChainSpec.heisenberg(6, b=b)))
        values.append(measures.reduced_interference_closed(dynamics.amplitudes(sp, times)))
    worst = float(np.abs(values[0] - values[1]).max())
    return worst < 1e-10, worst


def check_forced_values():
    worst = 0.0
    for spec in _chains():
        sp = dynamics.decompose(hamiltonians.build_single_excitation(spec))
        s = measures.measure_sample(sp, 0.0)
        worst = max(worst, abs(s.fidelity - 0.5), s.i_reduced, s.i_full_normalized)
    d = 6
    dft = np.fft.fft(np.eye(d)) / np.sqrt(d)
    worst = max(worst, abs(measures.interference_unitary(dft) - 1))
    worst = max(worst, measures.interference(channel.identity_channel(3)))
    return worst < 1e-12, worst


CHECKS = {
    "hermiticity": check_hermitian,
    "excitation conservation": check_conservation,
    "unitarity / probability sum rule": check_unitarity_and_sum_rule,
    "channel vs partial-trace oracle": check_channel_oracle,
    "closed-form vs tensor interference": check_closed_form,
    "uniform-field invariance of I_r": check_field_invariance,
    "forced values at t = 0": check_forced_values,
}


def run(out) -> bool:
    ok_all = True
    for name, check in CHECKS.items():
        ok, value = check()
        ok_all &= bool(ok)
        print(f"{'PASS' if ok else 'FAIL'}  {name}  (residual {value:.3e})", file=out)
    print(f"{'all checks passed' if ok_all else 'some checks FAILED'}", file=out)
    return ok_all
