"""GUS state-discrimination receivers built from a tuple of free phases.

A receiver for a geometrically uniform constellation is a circulant matrix
``A = F diag(lambda) F^dagger`` with ``|lambda_m|**2 = 1 / g_m``.  The free phase
``phases[j]`` multiplies the eigenvalue of DFT mode ``(j + 1) mod M``; with this
pairing the Fock coefficient of photon number ``n`` in the reference measurement
vector carries ``phases[(n - 1) mod M]``.  All phases zero gives the PGM.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constellation import GramMatrix

TWO_PI = 2 * math.pi


class SingularGramError(ValueError):
    """The Gram matrix is too close to singular for receiver synthesis."""


def wrap_phases(phases) -> np.ndarray:
    out = np.mod(np.asarray(phases, dtype=float), TWO_PI)
    # values that round up to 2 pi are the same point as 0
    out[np.isclose(out, TWO_PI, rtol=0, atol=1e-12)] = 0.0
    return out


@dataclass(frozen=True)
class ReceiverSpec:
    """Phase tuple of a GUS receiver, gauge-fixed so that ``phases[0] == 0``."""

    phases: tuple

    def __post_init__(self):
        ph = wrap_phases(self.phases)
        if ph.ndim != 1 or ph.size < 2:
            raise ValueError("need at least two phases")
        d0 = min(ph[0], TWO_PI - ph[0])
        if d0 > 1e-12:
            raise ValueError(f"phases[0] must be 0 (global phase gauge), got {self.phases[0]}")
        ph[0] = 0.0
        object.__setattr__(self, "phases", tuple(float(p) for p in ph))

    @property
    def M(self) -> int:
        return len(self.phases)

    @classmethod
    def pgm(cls, M: int = 4) -> ReceiverSpec:
        return cls((0.0,) * M)

    @classmethod
    def from_free(cls, free) -> ReceiverSpec:
        """Build from the ``M - 1`` free phases ``phases[1:]``."""
        return cls((0.0, *free))


def phase_mode(j, M: int):
    """DFT mode whose eigenvalue is paired with ``phases[j]``."""
    return (np.asarray(j) + 1) % M


def mode_phases(phases) -> np.ndarray:
    """Reorder phases (last axis) so that index ``m`` holds the phase of DFT mode ``m``."""
    phases = np.asarray(phases, dtype=float)
    return np.roll(phases, 1, axis=-1)


@dataclass(frozen=True)
class ReceiverMatrix:
    A: np.ndarray
    gram: GramMatrix
    spec: ReceiverSpec


def check_gram(gram: GramMatrix):
    if gram.is_singular:
        raise SingularGramError(
            f"smallest Gram eigenvalue {gram.min_eigenvalue:.3e} is below the synthesis floor"
        )


def build_receiver(spec: ReceiverSpec, gram: GramMatrix) -> ReceiverMatrix:
    if spec.M != gram.M:
        raise ValueError(f"receiver has {spec.M} phases but the Gram matrix is {gram.M}x{gram.M}")
    check_gram(gram)
    # A = F diag(lam) F^dagger is circulant, A[j, l] = ifft(lam)[(l - j) mod M];
    # building it from one FFT row keeps each entry to a single rounding chain
    lam = np.exp(1j * mode_phases(spec.phases)) / np.sqrt(gram.fourier_eigenvalues)
    col = np.fft.ifft(lam)
    M = gram.M
    A = col[(np.arange(M)[None, :] - np.arange(M)[:, None]) % M]
    return ReceiverMatrix(A=A, gram=gram, spec=spec)


@dataclass(frozen=True)
class ProbabilityKernel:
    """``cond[k, j] = p(j|k)`` for uniform inputs, with the output marginal."""

    cond: np.ndarray
    marginal: np.ndarray

    @classmethod
    def from_conditional(cls, cond) -> ProbabilityKernel:
        cond = np.asarray(cond, dtype=float)
        return cls(cond=cond, marginal=cond.mean(axis=0))

    @property
    def M(self) -> int:
        return self.cond.shape[0]

    def check(self, atol: float = 1e-9):
        if np.any(self.cond < -atol) or np.any(self.cond > 1 + atol):
            raise ValueError("conditional probabilities outside [0, 1]")
        rows = self.cond.sum(axis=1)
        if not np.allclose(rows, 1.0, rtol=0, atol=atol):
            raise ValueError(f"rows do not sum to one: {rows}")


def conditional_probabilities(rx: ReceiverMatrix) -> ProbabilityKernel:
    """``p(j|k) = |<mu_j | beta_k>|**2 = |(A^dagger G)[j, k]|**2``."""
    B = rx.A.conj().T @ rx.gram.entries
    return ProbabilityKernel.from_conditional(np.abs(B.T) ** 2)


def error_probability(kernel: ProbabilityKernel) -> float:
    return float(1.0 - np.mean(np.diag(kernel.cond)))


def kernel_rows(phases, g: np.ndarray) -> np.ndarray:
    """Vectorized GUS kernel: ``rows[..., d] = p(j|k)`` for ``(k - j) mod M = d``.

    Equivalent to :func:`conditional_probabilities` but takes any batch of phase
    tuples along the leading axes and skips the matrix algebra.
    """
    amp = np.exp(-1j * mode_phases(phases)) * np.sqrt(g)
    c = np.fft.ifft(amp, axis=-1)
    return np.abs(c) ** 2


def circulant_kernel(rows: np.ndarray) -> np.ndarray:
    """Expand ``rows[d]`` into the matrix ``cond[k, j] = rows[(k - j) mod M]``."""
    M = rows.shape[-1]
    i = np.arange(M)
    return rows[..., (i[:, None] - i[None, :]) % M]


# --- phase symmetries ------------------------------------------------------------


def phase_orbit(phases) -> np.ndarray:
    """All phase tuples describing the same receiver up to outcome relabeling.

    Adding a linear ramp ``2 pi s j / M`` cyclically relabels the outcomes and
    negating all phases mirrors the constellation; neither changes the key rate.
    Returns a ``(2M, M)`` array gauge-fixed to ``phases[0] = 0``.
    """
    ph = np.asarray(phases, dtype=float)
    M = ph.size
    j = np.arange(M)
    out = []
    for sign in (1.0, -1.0):
        for s in range(M):
            cand = sign * ph + TWO_PI * s * j / M
            out.append(wrap_phases(cand - cand[0]))
    return np.array(out)


def circular_distance(a, b) -> np.ndarray:
    d = np.mod(np.asarray(a) - np.asarray(b), TWO_PI)
    return np.minimum(d, TWO_PI - d)


def phase_distance(a, b) -> float:
    """Smallest max-abs circular difference between ``b`` and any member of the orbit of ``a``."""
    return float(circular_distance(phase_orbit(a), np.asarray(b)[None, :]).max(axis=1).min())


def canonical_phases(phases, atol: float = 1e-3) -> tuple:
    """Deterministic representative of the phase orbit.

    Mirror-symmetric tuples (``phases[j] == phases[M - j]``) are preferred, then the
    lexicographically smallest one on ``[0, 2 pi)``.
    """
    orbit = phase_orbit(phases)
    M = orbit.shape[1]
    mirror = (-np.arange(M)) % M
    sym = circular_distance(orbit, orbit[:, mirror]).max(axis=1) <= atol
    pool = orbit[sym] if sym.any() else orbit
    # snap near-2pi values so the lexicographic order is stable
    snapped = np.where(circular_distance(pool, 0.0) <= atol, 0.0, pool)
    keys = np.round(snapped, 6)
    order = np.lexsort(keys.T[::-1])
    return tuple(float(p) for p in snapped[order[0]])


# --- Fock representation ---------------------------------------------------------


def fock_truncation(mean_photons: float) -> int:
    """Photon-number cutoff leaving a Poisson tail below 1e-12."""
    return int(math.ceil(mean_photons + 10 * math.sqrt(max(mean_photons, 1.0)) + 20))


def coherent_fock(beta: complex, n_max: int) -> np.ndarray:
    """Fock amplitudes of ``|beta>`` for n = 0..n_max."""
    n = np.arange(n_max + 1)
    out = np.empty(n_max + 1, dtype=complex)
    out[0] = math.exp(-abs(beta) ** 2 / 2)
    for k in n[1:]:
        out[k] = out[k - 1] * beta / math.sqrt(k)
    return out


@dataclass(frozen=True)
class FockVector:
    coefficients: np.ndarray

    @property
    def n_max(self) -> int:
        return self.coefficients.size - 1

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.coefficients, self.coefficients).real)

    def rotated(self, j: int, M: int = 4) -> FockVector:
        """Apply the constellation rotation ``j`` times (``|beta> -> |beta e^{2 pi i j / M}>``)."""
        n = np.arange(self.n_max + 1)
        return FockVector(self.coefficients * np.exp(2j * np.pi * j * n / M))

    def overlap_coherent(self, beta: complex) -> complex:
        """``<self | beta>``."""
        return complex(np.vdot(self.coefficients, coherent_fock(beta, self.n_max)))


def reference_vector_fock(
    spec: ReceiverSpec, gram: GramMatrix, alpha_t: complex, n_max: int | None = None
) -> FockVector:
    """Fock coefficients of the reference measurement vector ``|mu_0>``.

    ``alpha_t`` is the received amplitude of symbol 0 and ``gram`` the Gram
    matrix of the received states (its overlap must equal ``|alpha_t|**2``).
    """
    check_gram(gram)
    x = abs(alpha_t) ** 2
    if not math.isclose(x, gram.overlap, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"|alpha_t|^2 = {x} does not match the Gram overlap {gram.overlap}")
    required = fock_truncation(x)
    if n_max is None:
        n_max = required
    elif n_max < required:
        raise ValueError(f"n_max={n_max} leaves a Poisson tail above 1e-12; need >= {required}")
    M = spec.M
    lam = np.exp(1j * np.asarray(spec.phases)) / np.sqrt(
        gram.fourier_eigenvalues[phase_mode(np.arange(M), M)]
    )
    n = np.arange(n_max + 1)
    return FockVector(coherent_fock(alpha_t, n_max) * lam[(n - 1) % M])
