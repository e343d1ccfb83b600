"""Key-rate maximization over modulation energy and receiver phases, and distance sweeps."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .constellation import DEFAULT_KAPPA, transmissivity
from .feedforward import ff_kgr
from .heterodyne import het_kgr_point
from .infotheory import KgrPoint, gus_rates, kgr
from .receivers import ReceiverSpec, SingularGramError, canonical_phases, phase_distance

log = logging.getLogger(__name__)

M = 4
PENALTY = 1e3


@dataclass(frozen=True)
class OptimizationBudget:
    phase_steps: int = 8
    energy_min: float = 0.1
    energy_max: float = 3.0
    energy_step: float = 0.1
    alpha2_bounds: tuple = (0.01, 6.0)
    xatol: float = 1e-7
    fatol: float = 1e-13
    multistart: int = 4
    random_starts: int = 0
    max_evaluations: int = 20000
    seed: int = 0

    def __post_init__(self):
        if self.xatol <= 0 or self.fatol <= 0:
            raise ValueError("tolerances must be positive")
        if self.multistart < 4:
            raise ValueError("need at least 4 multistarts")
        lo, hi = self.alpha2_bounds
        if not 0 < lo < hi:
            raise ValueError("alpha2 bounds must satisfy 0 < lo < hi")

    @property
    def energy_grid(self) -> np.ndarray:
        n = int(round((self.energy_max - self.energy_min) / self.energy_step)) + 1
        return self.energy_min + self.energy_step * np.arange(n)

    @property
    def phase_grid(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.phase_steps) / self.phase_steps


BUDGETS = {
    "fast": OptimizationBudget(phase_steps=4, energy_step=0.2),
    "default": OptimizationBudget(),
    "thorough": OptimizationBudget(phase_steps=12, energy_step=0.05, multistart=8, random_starts=4),
}


def get_budget(name_or_budget=None, seed: int | None = None) -> OptimizationBudget:
    if name_or_budget is None:
        b = BUDGETS["default"]
    elif isinstance(name_or_budget, OptimizationBudget):
        b = name_or_budget
    else:
        try:
            b = BUDGETS[name_or_budget]
        except KeyError:
            raise ValueError(f"unknown budget {name_or_budget!r}; choose from {sorted(BUDGETS)}") from None
    return b if seed is None else replace(b, seed=seed)


def _safe(f):
    def wrapped(a2):
        try:
            return f(a2)
        except SingularGramError:
            return -math.inf
    return wrapped


def maximize_energy(f, budget: OptimizationBudget):
    """Maximize ``f(alpha2)``: coarse grid, then bounded refinement around the best node.

    Returns ``(alpha2, value, evaluations)``.
    """
    f = _safe(f)
    lo, hi = budget.alpha2_bounds
    grid = budget.energy_grid
    grid = grid[(grid >= lo) & (grid <= hi)]
    vals = np.array([f(a) for a in grid])
    if not np.isfinite(vals).any():
        raise SingularGramError("no admissible modulation energy on the coarse grid")
    i = int(np.argmax(vals))  # first index: smallest alpha2 on ties
    left = lo if i == 0 else grid[i - 1]
    right = hi if i == len(grid) - 1 else grid[i + 1]
    res = minimize_scalar(lambda a: -f(a), bounds=(left, right), method="bounded",
                          options={"xatol": budget.xatol, "maxiter": 500})
    nev = len(grid) + int(res.nfev)
    if -res.fun >= vals[i]:
        return float(res.x), float(-res.fun), nev
    return float(grid[i]), float(vals[i]), nev


def maximize_pgm(T: float, beta: float = 0.95, budget=None, distance_km=float("nan")) -> KgrPoint:
    budget = get_budget(budget)
    pgm = np.zeros(M)
    a2, _, nev = maximize_energy(lambda a: float(gus_rates(pgm, a, T, beta)[0]), budget)
    pt = kgr(ReceiverSpec.pgm(M), a2, T, beta, distance_km)
    pt.receiver = "pgm"
    pt.evaluations = nev
    return pt


def maximize_het(T: float, beta: float = 0.95, budget=None, distance_km=float("nan")) -> KgrPoint:
    budget = get_budget(budget)
    a2, _, nev = maximize_energy(lambda a: het_kgr_point(a, T, beta).K, budget)
    pt = het_kgr_point(a2, T, beta, distance_km=distance_km)
    pt.evaluations = nev
    return pt


def maximize_ff(N: int, T: float, beta: float = 0.95, budget=None, distance_km=float("nan")) -> KgrPoint:
    budget = get_budget(budget)
    a2, _, nev = maximize_energy(lambda a: ff_kgr(N, a, T, beta).K, budget)
    pt = ff_kgr(N, a2, T, beta, distance_km)
    pt.evaluations = nev
    return pt


def _distinct_orbits(candidates, count):
    """Keep the first ``count`` candidates whose phase orbits differ."""
    kept = []
    for K, phases, a2 in candidates:
        if any(phase_distance(phases, p) < 1e-9 for _, p, _ in kept):
            continue
        kept.append((K, phases, a2))
        if len(kept) == count:
            break
    return kept


def maximize_kor(T: float, beta: float = 0.95, budget=None, distance_km=float("nan")) -> KgrPoint:
    """Maximize the key rate over all GUS receivers and the modulation energy."""
    budget = get_budget(budget)
    lo, hi = budget.alpha2_bounds
    pgm = maximize_pgm(T, beta, budget)
    nev = pgm.evaluations

    free = np.array(list(itertools.product(budget.phase_grid, repeat=M - 1)))
    grid_phases = np.hstack([np.zeros((len(free), 1)), free])
    cands = []
    for a2 in budget.energy_grid:
        if not lo <= a2 <= hi:
            continue
        try:
            K = gus_rates(grid_phases, a2, T, beta)[0]
        except SingularGramError:
            continue
        nev += len(grid_phases)
        for i in np.argsort(-K, kind="stable")[: 4 * budget.multistart]:
            cands.append((float(K[i]), grid_phases[i], float(a2)))
    cands.sort(key=lambda c: -c[0])
    starts = _distinct_orbits(cands, budget.multistart)
    starts.insert(0, (pgm.K, np.zeros(M), pgm.alpha2))
    rng = np.random.default_rng(budget.seed)
    for _ in range(budget.random_starts):
        ph = np.r_[0.0, rng.uniform(0, 2 * np.pi, M - 1)]
        starts.append((-math.inf, ph, float(rng.uniform(budget.energy_min, budget.energy_max))))

    def objective(z):
        try:
            return -float(gus_rates(np.r_[0.0, z[:-1]], z[-1], T, beta)[0])
        except SingularGramError:
            return PENALTY

    best = (pgm.K, np.zeros(M), pgm.alpha2)
    converged = True
    per_start = max(200, budget.max_evaluations // max(len(starts), 1))
    for _, ph, a2 in starts:
        res = minimize(objective, np.r_[ph[1:], a2], method="Nelder-Mead",
                       bounds=[(None, None)] * (M - 1) + [(lo, hi)],
                       options={"xatol": budget.xatol, "fatol": budget.fatol,
                                "maxfev": per_start, "initial_simplex": _simplex(ph[1:], a2, lo, hi)})
        nev += int(res.nfev)
        converged &= bool(res.success)
        K = -float(res.fun)
        cand = (K, np.r_[0.0, res.x[:-1]], float(res.x[-1]))
        if _better(cand, best):
            best = cand
    if not converged:
        log.warning("Nelder-Mead hit its evaluation cap at T=%.4g; reporting best so far", T)

    K, phases, a2 = best
    phases = canonical_phases(phases)
    pt = kgr(ReceiverSpec(phases), a2, T, beta, distance_km)
    pt.receiver = "kor"
    pt.evaluations = nev
    pt.converged = converged
    return pt


def _simplex(ph, a2, lo, hi):
    x0 = np.r_[ph, a2]
    n = x0.size
    simplex = np.tile(x0, (n + 1, 1))
    steps = np.r_[np.full(n - 1, 0.3), 0.1]
    for i in range(n):
        simplex[i + 1, i] += steps[i]
    simplex[:, -1] = np.clip(simplex[:, -1], lo, hi)
    if simplex[-1, -1] == simplex[0, -1]:
        simplex[-1, -1] -= steps[-1]
    return simplex


def _better(cand, best, tol=1e-12):
    """Higher K wins; near-ties go to smaller alpha2, then the smaller canonical phase tuple."""
    if cand[0] > best[0] + tol:
        return True
    if cand[0] < best[0] - tol:
        return False
    if not math.isclose(cand[2], best[2], abs_tol=1e-9):
        return cand[2] < best[2]
    return canonical_phases(cand[1]) < canonical_phases(best[1])


# --- sweeps ---------------------------------------------------------------------


def parse_receiver(tag: str):
    tag = tag.strip().lower()
    if tag in ("pgm", "kor", "het"):
        return tag, None
    if tag.startswith("ff:"):
        N = int(tag[3:])
        if N < M - 1:
            raise ValueError(f"feed-forward receiver needs N >= {M - 1}")
        return "ff", N
    raise ValueError(f"unknown receiver {tag!r}")


def optimize_receiver(tag: str, T: float, beta: float, budget, distance_km=float("nan")) -> KgrPoint:
    kind, N = parse_receiver(tag)
    if kind == "pgm":
        return maximize_pgm(T, beta, budget, distance_km)
    if kind == "kor":
        return maximize_kor(T, beta, budget, distance_km)
    if kind == "het":
        return maximize_het(T, beta, budget, distance_km)
    return maximize_ff(N, T, beta, budget, distance_km)


def _failed(tag, T, beta, d, err) -> KgrPoint:
    nan = float("nan")
    pt = KgrPoint(receiver=tag, T=T, beta=beta, alpha2=nan, I_AB=nan, chi_BE=nan, K=nan,
                  distance_km=d, converged=False)
    pt.extra["error"] = f"{type(err).__name__}: {err}"
    return pt


@dataclass
class SweepResult:
    distances: np.ndarray
    beta: float
    kappa: float
    points: dict = field(default_factory=dict)  # receiver tag -> list[KgrPoint]
    failures: list = field(default_factory=list)

    def K(self, receiver: str) -> np.ndarray:
        return np.array([p.K for p in self.points[receiver]])

    def ratio(self, receiver: str) -> np.ndarray:
        """``K_receiver / K_het``; NaN where the heterodyne rate is not positive."""
        k = self.K(receiver)
        het = self.K("het")
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(het > 0, k / het, np.nan)

    @property
    def ratios(self) -> dict:
        return {r: self.ratio(r) for r in self.points if r != "het" and "het" in self.points}


def sweep(distances, receivers, beta: float = 0.95, budget=None, kappa: float = DEFAULT_KAPPA) -> SweepResult:
    distances = np.asarray(sorted(float(d) for d in distances))
    if distances.size == 0 or not receivers:
        raise ValueError("need at least one distance and one receiver")
    if np.any(np.diff(distances) <= 0):
        raise ValueError("distances must be distinct")
    budget = get_budget(budget)
    tags = list(dict.fromkeys(r.strip().lower() for r in receivers))
    for t in tags:
        parse_receiver(t)
    if "het" not in tags:
        tags.append("het")
    result = SweepResult(distances=distances, beta=beta, kappa=kappa)
    for tag in tags:
        result.points[tag] = []
    for d in distances:
        T = transmissivity(d, kappa)
        for tag in tags:
            try:
                pt = optimize_receiver(tag, T, beta, budget, d)
            except (ValueError, ArithmeticError, np.linalg.LinAlgError) as err:
                log.error("receiver %s failed at d=%g km: %s", tag, d, err)
                pt = _failed(tag, T, beta, d, err)
                result.failures.append((tag, float(d), pt.extra["error"]))
            result.points[tag].append(pt)
    return result


def local_maxima(x, y) -> list:
    """``(x, y)`` of interior local maxima of a sampled curve, NaNs ignored."""
    x = np.asarray(x)
    y = np.asarray(y)
    out = []
    for i in range(1, len(y) - 1):
        if np.isfinite(y[i - 1:i + 2]).all() and y[i] > y[i - 1] and y[i] >= y[i + 1]:
            out.append((float(x[i]), float(y[i])))
    return out


def crossing_distance(x, y, level: float = 1.0) -> float:
    """First ``x`` where ``y`` falls below ``level``, linearly interpolated; NaN if never."""
    x = np.asarray(x)
    y = np.asarray(y)
    for i in range(1, len(y)):
        if y[i - 1] >= level > y[i]:
            return float(x[i - 1] + (level - y[i - 1]) * (x[i] - x[i - 1]) / (y[i] - y[i - 1]))
    return float("nan")
