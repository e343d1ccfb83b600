"""PSK constellations, the pure-loss channel and Gram matrices of coherent states."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Below this smallest Gram eigenvalue the receiver synthesis is refused.
SINGULAR_FLOOR = 1e-12
DEFAULT_KAPPA = 0.2


@dataclass(frozen=True)
class Constellation:
    """M coherent states ``alpha * exp(i pi (2k+1) / M)`` sent with uniform priors."""

    M: int
    alpha: float
    amplitudes: np.ndarray = field(repr=False)

    @property
    def alpha2(self) -> float:
        return self.alpha**2

    @property
    def theta(self) -> float:
        return 2 * math.pi / self.M

    @property
    def priors(self) -> np.ndarray:
        return np.full(self.M, 1.0 / self.M)

    def scaled(self, scale: float) -> np.ndarray:
        """Amplitudes after a beam splitter of intensity transmissivity ``scale``."""
        return math.sqrt(scale) * self.amplitudes


def make_constellation(M: int = 4, alpha2: float = 1.0) -> Constellation:
    if M < 2:
        raise ValueError(f"a PSK constellation needs M >= 2, got {M}")
    if alpha2 < 0:
        raise ValueError(f"alpha2 must be nonnegative, got {alpha2}")
    alpha = math.sqrt(alpha2)
    k = np.arange(M)
    amplitudes = alpha * np.exp(1j * np.pi * (2 * k + 1) / M)
    return Constellation(M=M, alpha=alpha, amplitudes=amplitudes)


@dataclass(frozen=True)
class Channel:
    distance_km: float
    kappa: float = DEFAULT_KAPPA

    def __post_init__(self):
        if self.distance_km < 0:
            raise ValueError(f"distance must be nonnegative, got {self.distance_km}")
        if self.kappa <= 0:
            raise ValueError(f"loss rate must be positive, got {self.kappa}")

    @property
    def T(self) -> float:
        return transmissivity(self.distance_km, self.kappa)


def transmissivity(distance_km: float, kappa: float = DEFAULT_KAPPA) -> float:
    """Fiber transmissivity ``10**(-kappa d / 10)`` for loss ``kappa`` in dB/km."""
    if distance_km < 0:
        raise ValueError(f"distance must be nonnegative, got {distance_km}")
    if kappa <= 0:
        raise ValueError(f"loss rate must be positive, got {kappa}")
    return 10.0 ** (-kappa * distance_km / 10.0)


def dft_matrix(M: int) -> np.ndarray:
    """Unitary DFT matrix ``F[j, k] = exp(-2 pi i j k / M) / sqrt(M)``."""
    jk = np.outer(np.arange(M), np.arange(M))
    return np.exp(-2j * np.pi * jk / M) / math.sqrt(M)


def poisson_class_weights(x: float, M: int) -> np.ndarray:
    """``M exp(-x) sum_{n = j mod M} x**n / n!`` for j = 0..M-1.

    These are the Fourier eigenvalues of a PSK Gram matrix with ``x = scale * alpha2``.
    Summing the series directly keeps the small eigenvalues accurate to full relative
    precision, which a floating-point DFT of the overlaps cannot do when ``x`` is small.
    """
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    out = np.zeros(M)
    if x == 0:
        out[0] = M
        return out
    # log-space terms; the Poisson pmf is negligible beyond mean + 40 sqrt(mean) + 60
    n_max = int(math.ceil(x + 40 * math.sqrt(x) + 60))
    n = np.arange(n_max + 1)
    logs = n * math.log(x) - x - np.array([math.lgamma(v + 1) for v in n])
    terms = np.exp(logs)
    for j in range(M):
        out[j] = M * terms[j::M].sum()
    return out


@dataclass(frozen=True)
class GramMatrix:
    """Overlaps ``G[l, k] = <beta_l | beta_k>`` of a scaled PSK constellation.

    ``fourier_eigenvalues[m]`` is the eigenvalue of the DFT mode ``m``, i.e. the
    ``m``-th entry of the DFT of the first row. They are never sorted.
    """

    entries: np.ndarray
    fourier_eigenvalues: np.ndarray
    overlap: float  # scale * alpha2

    @property
    def M(self) -> int:
        return self.entries.shape[0]

    @property
    def min_eigenvalue(self) -> float:
        return float(self.fourier_eigenvalues.min())

    @property
    def is_singular(self) -> bool:
        return self.min_eigenvalue < SINGULAR_FLOOR


def gram_from_overlap(x: float, M: int = 4) -> GramMatrix:
    """Gram matrix of ``M`` PSK states with energy ``x`` (already scaled)."""
    d = np.arange(M)
    ang = 2 * np.pi * d / M
    row = np.exp(-x * (1 - np.cos(ang)) + 1j * x * np.sin(ang))
    # circulant: G[l, k] = row[(k - l) mod M]
    idx = (d[None, :] - d[:, None]) % M
    entries = row[idx]
    return GramMatrix(entries=entries, fourier_eigenvalues=poisson_class_weights(x, M), overlap=x)


def gram_matrix(c: Constellation, scale: float = 1.0) -> GramMatrix:
    """Gram matrix of the constellation after amplitude scaling by ``sqrt(scale)``.

    Use ``scale=T`` for the states reaching the receiver and ``scale=1-T`` for the
    states reflected to the eavesdropper.
    """
    if not 0.0 <= scale <= 1.0:
        raise ValueError(f"scale must lie in [0, 1], got {scale}")
    return gram_from_overlap(scale * c.alpha2, c.M)
