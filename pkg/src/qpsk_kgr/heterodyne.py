"""Heterodyne-detection baseline: Gaussian outcome densities and 2D Simpson quadrature."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .constellation import gram_from_overlap, make_constellation
from .infotheory import KgrPoint, entropies_from_spectra, spectra

SIGMA0_SQ = 1.0  # shot-noise variance, SNU
BOUNDARY_DENSITY = 1e-12
DEFAULT_STEP = 0.1
MIN_NODES = 201
# differential entropy of the conditional density: two Gaussians of variance 2 sigma0^2
CONDITIONAL_ENTROPY = math.log2(4 * math.pi * math.e * SIGMA0_SQ)


class GridInadequateError(ValueError):
    """The quadrature grid truncates a non-negligible part of the outcome density."""


@dataclass(frozen=True)
class HeterodyneGrid:
    half_width: float
    nodes: int

    def __post_init__(self):
        if self.nodes < 41 or self.nodes % 2 == 0:
            raise ValueError(f"Simpson's rule needs an odd node count >= 41, got {self.nodes}")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.nodes)

    @property
    def step(self) -> float:
        return 2 * self.half_width / (self.nodes - 1)

    def refined(self) -> HeterodyneGrid:
        """Same extent, half the step."""
        return HeterodyneGrid(self.half_width, 2 * self.nodes - 1)


def default_grid(alpha2: float, T: float, step: float = DEFAULT_STEP) -> HeterodyneGrid:
    # density exp(-r^2 / 4) / (4 pi) drops below the 1e-12 boundary flag at r = 10.02
    half_width = 2 * math.sqrt(T * alpha2) + 11.0
    nodes = max(MIN_NODES, 2 * math.ceil(half_width / step) + 1)
    return HeterodyneGrid(half_width, nodes)


def _means(alpha2: float, T: float, M: int = 4) -> np.ndarray:
    a = make_constellation(M, alpha2).amplitudes
    return 2 * math.sqrt(SIGMA0_SQ * T) * a


def het_conditional_pdf(x, y, alpha_k: complex, T: float):
    """Density of the heterodyne outcome ``(x, y)`` given the sent amplitude ``alpha_k``."""
    mx = 2 * math.sqrt(SIGMA0_SQ * T) * alpha_k.real
    my = 2 * math.sqrt(SIGMA0_SQ * T) * alpha_k.imag
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.exp(-((x - mx) ** 2 + (y - my) ** 2) / (4 * SIGMA0_SQ)) / (4 * math.pi * SIGMA0_SQ)


def _component_densities(alpha2, T, grid: HeterodyneGrid, M: int = 4) -> np.ndarray:
    ax = grid.axis
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    a = make_constellation(M, alpha2).amplitudes
    return np.stack([het_conditional_pdf(X, Y, ak, T) for ak in a])


def _integrate(values: np.ndarray, grid: HeterodyneGrid) -> float:
    ax = grid.axis
    return float(simpson(simpson(values, x=ax, axis=1), x=ax))


def _check_boundary(p_b: np.ndarray):
    edge = max(p_b[0].max(), p_b[-1].max(), p_b[:, 0].max(), p_b[:, -1].max())
    if edge > BOUNDARY_DENSITY:
        raise GridInadequateError(f"outcome density {edge:.2e} at the grid boundary")


def het_mutual_information(alpha2: float, T: float, grid: HeterodyneGrid | None = None) -> float:
    grid = grid or default_grid(alpha2, T)
    p_b = _component_densities(alpha2, T, grid).mean(axis=0)
    _check_boundary(p_b)
    safe = np.where(p_b > 0, p_b, 1.0)
    h_b = _integrate(-p_b * np.log2(safe), grid)
    return max(h_b - CONDITIONAL_ENTROPY, 0.0)


def _conditional_eve_entropy(comps: np.ndarray, eve: np.ndarray) -> np.ndarray:
    w = np.moveaxis(comps, 0, -1)
    tot = w.sum(axis=-1, keepdims=True)
    # far tails underflow to 0/0; any weights give a finite entropy there and p_B ~ 0
    w = np.where(tot > 0, w / np.where(tot > 0, tot, 1.0), 1.0 / w.shape[-1])
    return entropies_from_spectra(spectra(w, eve))


def het_holevo(alpha2: float, T: float, grid: HeterodyneGrid | None = None,
               use_symmetry: bool = True) -> float:
    """Eve's Holevo information about the heterodyne outcome, by 2D Simpson quadrature.

    With ``use_symmetry`` the conditional entropy is diagonalized on one octant only:
    it is invariant under quarter turns and under ``y -> -y`` for a QPSK constellation.
    """
    grid = grid or default_grid(alpha2, T)
    comps = _component_densities(alpha2, T, grid)
    M = comps.shape[0]
    p_b = comps.mean(axis=0)
    _check_boundary(p_b)
    eve = gram_from_overlap((1.0 - T) * alpha2, M).entries
    s_e = float(entropies_from_spectra(spectra(np.full(M, 1.0 / M), eve)))
    if use_symmetry and M == 4:
        c = grid.nodes // 2
        a, b = np.tril_indices(c + 1)
        s_oct = np.zeros((c + 1, c + 1))
        s_oct[a, b] = _conditional_eve_entropy(comps[:, c + a, c + b], eve)
        u = np.abs(np.arange(grid.nodes) - c)
        U, V = np.meshgrid(u, u, indexing="ij")
        s_x = s_oct[np.maximum(U, V), np.minimum(U, V)]
    else:
        s_x = _conditional_eve_entropy(comps, eve)
    chi = s_e - _integrate(p_b * s_x, grid)
    return min(max(chi, 0.0), s_e)


def het_kgr_point(alpha2: float, T: float, beta: float = 0.95, grid=None,
                  distance_km: float = float("nan")) -> KgrPoint:
    I = het_mutual_information(alpha2, T, grid)
    chi = het_holevo(alpha2, T, grid)
    return KgrPoint(receiver="het", T=T, beta=beta, alpha2=alpha2, I_AB=I, chi_BE=chi,
                    K=beta * I - chi, distance_km=distance_km)


def het_kgr(T: float, beta: float = 0.95, budget=None, distance_km: float = float("nan")) -> KgrPoint:
    """Heterodyne key rate maximized over the modulation energy."""
    from .optimizer import maximize_het

    return maximize_het(T, beta, budget, distance_km=distance_km)


# --- Monte Carlo oracles -------------------------------------------------------------


def _sample_outcomes(alpha2, T, samples, rng, M=4):
    k = rng.integers(0, M, size=samples)
    means = _means(alpha2, T, M)[k]
    sd = math.sqrt(2 * SIGMA0_SQ)
    x = means.real + sd * rng.standard_normal(samples)
    y = means.imag + sd * rng.standard_normal(samples)
    return x, y


def _mc_components(alpha2, T, x, y, M=4):
    a = make_constellation(M, alpha2).amplitudes
    return np.stack([het_conditional_pdf(x, y, ak, T) for ak in a], axis=-1)


def het_mutual_information_mc(alpha2, T, samples=10**6, seed=0):
    """Monte Carlo estimate and standard error of the heterodyne mutual information."""
    rng = np.random.default_rng(seed)
    x, y = _sample_outcomes(alpha2, T, samples, rng)
    p_b = _mc_components(alpha2, T, x, y).mean(axis=-1)
    v = -np.log2(p_b) - CONDITIONAL_ENTROPY
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(samples))


def het_holevo_mc(alpha2, T, samples=10**6, seed=0, chunk=200_000):
    """Monte Carlo estimate and standard error of the heterodyne Holevo information."""
    rng = np.random.default_rng(seed)
    M = 4
    eve = gram_from_overlap((1.0 - T) * alpha2, M).entries
    s_e = float(entropies_from_spectra(spectra(np.full(M, 1.0 / M), eve)))
    x, y = _sample_outcomes(alpha2, T, samples, rng)
    vals = []
    for lo in range(0, samples, chunk):
        comps = _mc_components(alpha2, T, x[lo:lo + chunk], y[lo:lo + chunk])
        w = comps / comps.sum(axis=-1, keepdims=True)
        vals.append(entropies_from_spectra(spectra(w, eve)))
    v = s_e - np.concatenate(vals)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(samples))
