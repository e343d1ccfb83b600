"""Shannon/von Neumann entropies, Eve's states, Holevo information and the key rate."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .constellation import GramMatrix, gram_from_overlap, gram_matrix, make_constellation
from .receivers import (
    ProbabilityKernel,
    ReceiverSpec,
    build_receiver,
    check_gram,
    circulant_kernel,
    conditional_probabilities,
    kernel_rows,
)

EIGEN_CLIP = 1e-12
ZERO_OUTCOME = 1e-15


def _xlog2x(p: np.ndarray) -> np.ndarray:
    safe = np.where(p > 0, p, 1.0)
    return np.where(p > 0, p * np.log2(safe), 0.0)


def shannon_entropy(p) -> float:
    """Entropy in bits, with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("probabilities must be nonnegative")
    if not math.isclose(p.sum(), 1.0, abs_tol=1e-9):
        raise ValueError(f"probabilities sum to {p.sum()}, not 1")
    return float(-_xlog2x(p).sum())


def mutual_information(kernel: ProbabilityKernel) -> float:
    """``H[p_B] - (1/M) sum_k H[p(.|k)]`` for uniform inputs."""
    cond_h = -_xlog2x(kernel.cond).sum(axis=1)
    return float(shannon_entropy(kernel.marginal) - cond_h.mean())


@dataclass(frozen=True)
class CoherentMixture:
    """``rho = sum_k c_k |beta_k><beta_k|`` over the reflected constellation."""

    weights: np.ndarray
    reflected_gram: GramMatrix

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or not math.isclose(w.sum(), 1.0, abs_tol=1e-9):
            raise ValueError("mixture weights must be a probability vector")
        object.__setattr__(self, "weights", w)


def spectra(weights: np.ndarray, gram_entries: np.ndarray) -> np.ndarray:
    """Eigenvalues of ``sum_k c_k |beta_k><beta_k|`` for a batch of weight vectors.

    The nonzero spectrum of the mixture coincides with that of
    ``diag(sqrt(c)) G diag(sqrt(c))``, a Hermitian M x M matrix.
    """
    s = np.sqrt(np.asarray(weights, dtype=float))
    mats = s[..., :, None] * gram_entries * s[..., None, :]
    ev = np.linalg.eigvalsh(mats)
    return np.where(ev < EIGEN_CLIP, 0.0, ev)


def entropies_from_spectra(ev: np.ndarray) -> np.ndarray:
    return -_xlog2x(ev).sum(axis=-1)


def mixture_eigenvalues(mix: CoherentMixture) -> np.ndarray:
    return spectra(mix.weights, mix.reflected_gram.entries)


def von_neumann_entropy(mix: CoherentMixture) -> float:
    return float(entropies_from_spectra(mixture_eigenvalues(mix)))


def uniform_mixture_spectrum(x: float) -> np.ndarray:
    """Closed-form spectrum of the equal-weight QPSK mixture with energy ``x`` per state."""
    e = math.exp(-x) / 2
    return np.array([
        e * (math.cosh(x) + math.cos(x)),
        e * (math.cosh(x) - math.cos(x)),
        e * (math.sinh(x) + abs(math.sin(x))),
        e * (math.sinh(x) - abs(math.sin(x))),
    ])


def holevo_from_kernel(kernel: ProbabilityKernel, eve_gram: GramMatrix) -> float:
    """``S[rho_E] - sum_j p_B(j) S[rho_E|j]`` for Eve's reflected states."""
    M = kernel.M
    s_e = entropies_from_spectra(spectra(np.full(M, 1.0 / M), eve_gram.entries))
    total = 0.0
    for j in range(M):
        pj = kernel.marginal[j]
        if pj < ZERO_OUTCOME:
            continue
        c = kernel.cond[:, j] / (M * pj)
        c = c / c.sum()
        total += pj * entropies_from_spectra(spectra(c, eve_gram.entries))
    return float(max(s_e - total, 0.0))


def holevo_information(kernel: ProbabilityKernel, constellation, T: float) -> float:
    return holevo_from_kernel(kernel, gram_matrix(constellation, 1.0 - T))


@dataclass
class KgrPoint:
    """Key rate and its ingredients at one operating point (bits per channel use)."""

    receiver: str
    T: float
    beta: float
    alpha2: float
    I_AB: float
    chi_BE: float
    K: float
    phases: tuple = ()
    distance_km: float = float("nan")
    evaluations: int = 0
    converged: bool = True
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["phases"] = list(self.phases)
        return d


def kgr_from_kernel(kernel, alpha2, T, beta, receiver, phases=(), distance_km=float("nan")) -> KgrPoint:
    eve = gram_from_overlap((1.0 - T) * alpha2, kernel.M)
    I = mutual_information(kernel)
    chi = holevo_from_kernel(kernel, eve)
    return KgrPoint(
        receiver=receiver, T=T, beta=beta, alpha2=alpha2, I_AB=I, chi_BE=chi,
        K=beta * I - chi, phases=tuple(phases), distance_km=distance_km,
    )


def _check_inputs(alpha2, T, beta):
    if not 0 < beta <= 1:
        raise ValueError(f"reconciliation efficiency must lie in (0, 1], got {beta}")
    if not 0 < T <= 1:
        raise ValueError(f"transmissivity must lie in (0, 1], got {T}")
    if alpha2 <= 0:
        raise ValueError(f"alpha2 must be positive, got {alpha2}")


def kgr(spec: ReceiverSpec, alpha2: float, T: float, beta: float = 0.95,
        distance_km: float = float("nan")) -> KgrPoint:
    """Key rate of the GUS receiver ``spec`` through the matrix formulation."""
    _check_inputs(alpha2, T, beta)
    c = make_constellation(spec.M, alpha2)
    rx = build_receiver(spec, gram_matrix(c, T))
    kernel = conditional_probabilities(rx)
    tag = "pgm" if not any(spec.phases) else "kor"
    return kgr_from_kernel(kernel, alpha2, T, beta, tag, spec.phases, distance_km)


def gus_rates(phases, alpha2: float, T: float, beta: float, M: int = 4):
    """Vectorized ``(K, I_AB, chi_BE)`` for a batch of phase tuples (last axis M).

    Uses the circulant structure: Bob's marginal is uniform and every conditional
    Eve state has the same spectrum, so only outcome 0 needs diagonalizing.
    Raises :class:`SingularGramError` like :func:`kgr`.
    """
    bob = gram_from_overlap(T * alpha2, M)
    check_gram(bob)
    eve = gram_from_overlap((1.0 - T) * alpha2, M)
    rows = kernel_rows(phases, bob.fourier_eigenvalues)
    rows = rows / rows.sum(axis=-1, keepdims=True)
    I = math.log2(M) + _xlog2x(rows).sum(axis=-1)
    # weights of rho_E|0: c_k = p(0|k) = rows[k]
    s_cond = entropies_from_spectra(spectra(rows, eve.entries))
    s_e = entropies_from_spectra(spectra(np.full(M, 1.0 / M), eve.entries))
    chi = np.maximum(s_e - s_cond, 0.0)
    return beta * I - chi, I, chi


def gus_kernel(phases, alpha2: float, T: float, M: int = 4) -> ProbabilityKernel:
    """Kernel from the fast path, expanded to a full matrix (for diagnostics)."""
    bob = gram_from_overlap(T * alpha2, M)
    return ProbabilityKernel.from_conditional(circulant_kernel(kernel_rows(phases, bob.fourier_eigenvalues)))
