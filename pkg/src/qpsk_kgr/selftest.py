"""Fast invariant checks run by ``qpsk-kgr selftest``; each takes well under a second."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constellation import gram_from_overlap, gram_matrix, make_constellation
from .feedforward import CascadeSpec, cascade_conditional_probs, cascade_kernel_dp
from .heterodyne import default_grid, het_holevo, het_mutual_information
from .infotheory import spectra, uniform_mixture_spectrum
from .phase_space import default_axis, wigner_map
from .receivers import (
    FockVector,
    ReceiverSpec,
    build_receiver,
    conditional_probabilities,
    reference_vector_fock,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _draws(rng, n, min_overlap=0.05):
    """Random ``(phases, T, alpha2)`` with ``T alpha2`` kept away from the singular corner."""
    out = []
    while len(out) < n:
        T = 1 - rng.random()
        a2 = 4 * (1 - rng.random())
        if T * a2 < min_overlap:
            continue
        out.append((np.concatenate([[0.0], rng.uniform(0, 2 * np.pi, 3)]), T, a2))
    return out


def check_povm(seed=0) -> CheckResult:
    worst = 0.0
    for ph, T, a2 in _draws(np.random.default_rng(seed), 200):
        g = gram_matrix(make_constellation(4, a2), T)
        A = build_receiver(ReceiverSpec(ph), g).A
        worst = max(worst, np.abs(A @ A.conj().T @ g.entries - np.eye(4)).max())
    return CheckResult("povm-constraint", worst < 1e-9, f"max |A A^+ G - 1| = {worst:.2e}")


def check_eve_spectrum() -> CheckResult:
    worst = 0.0
    for x in np.linspace(0, 5, 50):
        num = np.sort(spectra(np.full(4, 0.25), gram_from_overlap(x).entries))
        ana = np.sort(np.clip(uniform_mixture_spectrum(x), 0, None))
        worst = max(worst, np.abs(num - np.where(ana < 1e-12, 0, ana)).max())
    return CheckResult("eve-spectrum", worst < 1e-10, f"max deviation {worst:.2e}")


def check_fock_kernel() -> CheckResult:
    worst = 0.0
    for T, a2, ph in [(0.5, 0.8, (0, 0, 0, 0)), (0.3, 1.5, (0, math.pi / 2, math.pi, math.pi / 2)),
                      (0.9, 0.4, (0, 1.0, 2.0, 3.0))]:
        c = make_constellation(4, a2)
        g = gram_matrix(c, T)
        spec = ReceiverSpec(ph)
        cond = conditional_probabilities(build_receiver(spec, g)).cond
        at = math.sqrt(T) * c.amplitudes
        mu0 = reference_vector_fock(spec, g, at[0])
        fock = np.array([[abs(mu0.rotated(j, 4).overlap_coherent(at[k])) ** 2 for j in range(4)]
                         for k in range(4)])
        worst = max(worst, np.abs(cond - fock).max())
    return CheckResult("fock-kernel", worst < 1e-8, f"max deviation {worst:.2e}")


def check_feedforward() -> CheckResult:
    worst = 0.0
    for N in range(3, 11):
        for e in (0.1, 1.0):
            spec = CascadeSpec(N, e)
            worst = max(worst, np.abs(cascade_conditional_probs(spec).cond - cascade_kernel_dp(spec).cond).max())
    return CheckResult("feedforward-kernel", worst < 1e-12, f"max deviation {worst:.2e}")


def check_heterodyne() -> CheckResult:
    a2, T = 1.0, 0.5
    g = default_grid(a2, T)
    dI = abs(het_mutual_information(a2, T, g) - het_mutual_information(a2, T, g.refined()))
    dchi = abs(het_holevo(a2, T, g) - het_holevo(a2, T, g.refined()))
    return CheckResult("heterodyne-step", max(dI, dchi) < 1e-5, f"step-halving change {max(dI, dchi):.2e}")


def check_vacuum() -> CheckResult:
    w = wigner_map(FockVector(np.array([1.0 + 0j])), default_axis(6.0, 121))
    err = abs(w.normalization_integral - 4)
    return CheckResult("wigner-vacuum", err < 1e-4, f"integral {w.normalization_integral:.8f}")


CHECKS = (check_povm, check_eve_spectrum, check_fock_kernel, check_feedforward, check_heterodyne, check_vacuum)


def run_all() -> list:
    return [chk() for chk in CHECKS]
