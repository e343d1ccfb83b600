"""Wigner functions of pure states given in the Fock basis.

Convention: ``W(x, y) = (2/pi) sum_n (-1)^n <n| D(zeta)^dagger rho D(zeta) |n>`` with
``zeta = (x + i y) / 2`` in shot-noise units, so the vacuum integrates to 4.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.integrate import simpson

from .receivers import FockVector

log = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-8
DEFAULT_EXTENT = 6.0
DEFAULT_NODES = 241


class WignerTruncationError(RuntimeError):
    pass


@dataclass(frozen=True)
class WignerMap:
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray  # values[i, j] = W(x[i], y[j])
    imag_residue: float
    normalization_integral: float
    boundary_max: float

    @property
    def min_value(self) -> float:
        return float(self.values.min())

    @property
    def max_value(self) -> float:
        return float(self.values.max())


def default_axis(extent: float = DEFAULT_EXTENT, nodes: int = DEFAULT_NODES) -> np.ndarray:
    return np.linspace(-extent, extent, nodes)


def _displacement_basis(dim: int):
    """Eigen-decomposition of ``i (a^dagger - a)`` truncated to ``dim`` levels."""
    off = np.sqrt(np.arange(1, dim))
    gen = np.diag(off, -1) - np.diag(off, 1)  # a^dagger - a, real antisymmetric
    mu, V = np.linalg.eigh(1j * gen)
    return mu, V


def displaced_amplitudes(psi: np.ndarray, zetas: np.ndarray, dim: int, chunk: int = 4096) -> np.ndarray:
    """Fock amplitudes of ``D(-zeta) |psi>`` for every ``zeta``, in a ``dim``-level space.

    ``D(-zeta) = R(theta) exp(-r (a^dagger - a)) R(theta)^dagger`` with
    ``zeta = r e^{i theta}`` and ``R(theta) = exp(i theta n)``; the outer rotation only
    changes phases of the result and is applied as well so amplitudes are exact.
    """
    psi = np.asarray(psi, dtype=complex)
    zetas = np.asarray(zetas, dtype=complex).ravel()
    mu, V = _displacement_basis(dim)
    n_psi = psi.size
    n = np.arange(dim)
    Vh_psi = V.conj().T[:, :n_psi]  # V^dagger restricted to the support of psi
    out = np.empty((zetas.size, dim), dtype=complex)
    for lo in range(0, zetas.size, chunk):
        z = zetas[lo:lo + chunk]
        r = np.abs(z)
        th = np.angle(z)
        rotated = psi[None, :] * np.exp(-1j * th[:, None] * np.arange(n_psi)[None, :])
        coeff = rotated @ Vh_psi.T
        # exp(-r (a^dagger - a)) = V exp(-r * (-i mu)) V^dagger = V exp(i r mu) V^dagger
        coeff *= np.exp(1j * r[:, None] * mu[None, :])
        out[lo:lo + chunk] = (coeff @ V.T) * np.exp(1j * th[:, None] * n[None, :])
    return out


def wigner_map(state: FockVector, x=None, y=None, normalize: bool = False,
               strict: bool = False) -> WignerMap:
    """Wigner function of ``|state><state|`` on the lattice ``x`` by ``y``.

    ``normalize`` divides by the squared norm first; by default the projector is
    used as is. ``strict`` turns a non-negligible boundary value into an error.
    """
    x = default_axis() if x is None else np.asarray(x, dtype=float)
    y = x if y is None else np.asarray(y, dtype=float)
    psi = np.asarray(state.coefficients, dtype=complex)
    if normalize:
        psi = psi / math.sqrt(state.norm2)
    X, Y = np.meshgrid(x, y, indexing="ij")
    zetas = (X + 1j * Y) / 2
    max_z2 = float(np.max(np.abs(zetas)) ** 2)
    dim = psi.size + int(math.ceil(4 * max_z2)) + 20
    amps = displaced_amplitudes(psi, zetas, dim)
    parity = (-1.0) ** np.arange(dim)
    w = (2 / np.pi) * np.einsum("n,pn,pn->p", parity, amps.conj(), amps)
    values = w.real.reshape(X.shape)
    edge = max(np.abs(values[0]).max(), np.abs(values[-1]).max(),
               np.abs(values[:, 0]).max(), np.abs(values[:, -1]).max())
    if edge > BOUNDARY_TOL:
        msg = f"|W| = {edge:.2e} on the grid boundary; enlarge the grid"
        if strict:
            raise WignerTruncationError(msg)
        log.warning(msg)
    integral = float(simpson(simpson(values, x=y, axis=1), x=x))
    return WignerMap(x=x, y=y, values=values, imag_residue=float(np.abs(w.imag).max()),
                     normalization_integral=integral, boundary_max=float(edge))


def vacuum_wigner(x, y=None) -> np.ndarray:
    """Analytic vacuum map ``(2/pi) exp(-(x^2 + y^2) / 2)``."""
    y = x if y is None else y
    X, Y = np.meshgrid(x, y, indexing="ij")
    return (2 / np.pi) * np.exp(-(X**2 + Y**2) / 2)


def symmetry_report(wmap: WignerMap, rel_threshold: float = 0.05, size: int = 9) -> dict:
    """Local maxima of the map (above ``rel_threshold`` of the global maximum) and extremes."""
    v = wmap.values
    local = (v == ndimage.maximum_filter(v, size=size, mode="nearest"))
    local &= v > rel_threshold * v.max()
    ii, jj = np.nonzero(local)
    order = np.argsort(-v[ii, jj], kind="stable")
    peaks = [(float(wmap.x[i]), float(wmap.y[j]), float(v[i, j])) for i, j in zip(ii[order], jj[order])]
    heights = np.array([p[2] for p in peaks])
    return {
        "peaks": peaks,
        "n_peaks": len(peaks),
        "min_value": wmap.min_value,
        "max_value": wmap.max_value,
        "height_spread": float(heights.max() / heights.min()) if len(peaks) else float("nan"),
        "normalization_integral": wmap.normalization_integral,
    }
