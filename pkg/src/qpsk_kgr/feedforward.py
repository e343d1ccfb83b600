"""Displacement feed-forward receiver for QPSK.

The received pulse is split into N equal copies.  Copy ``m`` is displaced by the
current hypothesis amplitude and sent to an on/off detector; a click advances the
hypothesis pointer ``j``.  If the last copy stays dark the decision is ``j``,
otherwise a uniformly random choice among ``j+1 .. M-1`` is made.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .infotheory import KgrPoint, kgr_from_kernel
from .receivers import ProbabilityKernel

M = 4


@dataclass(frozen=True)
class CascadeSpec:
    N: int
    effective_energy: float  # T * alpha2, photons reaching the receiver

    def __post_init__(self):
        if self.N < M - 1:
            raise ValueError(f"need at least {M - 1} copies, got {self.N}")
        if self.effective_energy < 0:
            raise ValueError("effective energy must be nonnegative")


def no_click_probs(spec: CascadeSpec) -> np.ndarray:
    """``p[d]``: probability that a copy stays dark when the pointer is ``d`` steps behind the symbol."""
    e = spec.effective_energy / spec.N
    return np.array([1.0, math.exp(-2 * e), math.exp(-4 * e), math.exp(-2 * e)])


def _powers(p: float, N: int) -> np.ndarray:
    return p ** np.arange(N + 1)


def cascade_conditional_probs(spec: CascadeSpec) -> ProbabilityKernel:
    """Closed-form ``p(j|k)`` as sums over the click positions."""
    N = spec.N
    p = no_click_probs(spec)
    cond = np.zeros((M, M))
    t = np.arange(N)
    for k in range(M):
        a, b, c, d = (p[(k - i) % M] for i in range(M))
        pa, pb, pc, pd = (_powers(v, N) for v in (a, b, c, d))
        last_first = pa[N - 1] * (1 - a) / 3
        # first click at t, second click on the last copy
        t2 = t[: N - 1]
        half = np.sum(pa[t2] * (1 - a) * pb[N - 2 - t2] * (1 - b)) / 2

        cond[k, 0] = pa[N]
        t1 = t[: N - 1]
        cond[k, 1] = np.sum(pa[t1] * (1 - a) * pb[N - 1 - t1]) + last_first

        # two clicks at t and t+1+s, neither on the last copy, then dark
        T_, S_ = np.meshgrid(t[: N - 2], t[: N - 2], indexing="ij")
        ok = S_ <= N - 3 - T_
        two = pa[T_] * (1 - a) * pb[S_] * (1 - b) * pc[np.where(ok, N - 2 - T_ - S_, 0)]
        cond[k, 2] = np.sum(np.where(ok, two, 0.0)) + half + last_first

        # three clicks, the third anywhere up to the last copy
        T3, S3, U3 = np.meshgrid(t[: N - 2], t[: N - 2], t[: N - 2], indexing="ij")
        ok3 = U3 <= N - 3 - T3 - S3
        rest = np.where(ok3, N - 3 - T3 - S3 - U3, 0)
        three = pa[T3] * (1 - a) * pb[S3] * (1 - b) * pc[U3] * (1 - c) * pd[rest]
        cond[k, 3] = np.sum(np.where(ok3, three, 0.0)) + half + last_first
    return ProbabilityKernel.from_conditional(cond)


# --- independent oracles ---------------------------------------------------------


def _decide(pointer: int, clicked_last: bool) -> list:
    """Decision mass split after the last copy."""
    if not clicked_last:
        return [(pointer, 1.0)]
    rest = list(range(pointer + 1, M)) or [pointer]
    return [(j, 1.0 / len(rest)) for j in rest]


def cascade_kernel_enumeration(spec: CascadeSpec) -> ProbabilityKernel:
    """Exact kernel by enumerating all ``2**N`` click patterns of the state machine."""
    if spec.N > 18:
        raise ValueError("enumeration is limited to N <= 18; use cascade_kernel_dp")
    p = no_click_probs(spec)
    cond = np.zeros((M, M))
    for k in range(M):
        for pattern in itertools.product((False, True), repeat=spec.N):
            prob = 1.0
            j = 0
            for m, click in enumerate(pattern):
                q = p[(k - j) % M]
                prob *= (1 - q) if click else q
                if prob == 0.0:
                    break
                if click and m < spec.N - 1:
                    j = min(j + 1, M - 1)
            if prob == 0.0:
                continue
            for dec, w in _decide(j, pattern[-1]):
                cond[k, dec] += prob * w
    return ProbabilityKernel.from_conditional(cond)


def cascade_kernel_dp(spec: CascadeSpec) -> ProbabilityKernel:
    """Exact kernel by propagating the pointer distribution copy by copy, O(N M^2)."""
    p = no_click_probs(spec)
    cond = np.zeros((M, M))
    for k in range(M):
        state = np.zeros(M)
        state[0] = 1.0
        for _ in range(spec.N - 1):
            nxt = np.zeros(M)
            for j in range(M):
                q = p[(k - j) % M]
                nxt[j] += state[j] * q
                nxt[min(j + 1, M - 1)] += state[j] * (1 - q)
            state = nxt
        for j in range(M):
            q = p[(k - j) % M]
            for dec, w in _decide(j, False):
                cond[k, dec] += state[j] * q * w
            for dec, w in _decide(j, True):
                cond[k, dec] += state[j] * (1 - q) * w
    return ProbabilityKernel.from_conditional(cond)


def cascade_kernel_monte_carlo(spec: CascadeSpec, trials: int = 10**6, seed: int = 0):
    """Sampled kernel and its standard errors; the final random choice is sampled too."""
    rng = np.random.default_rng(seed)
    p = no_click_probs(spec)
    cond = np.zeros((M, M))
    for k in range(M):
        pointer = np.zeros(trials, dtype=int)
        for m in range(spec.N):
            q = p[(k - pointer) % M]
            click = rng.random(trials) >= q
            if m < spec.N - 1:
                pointer = np.minimum(pointer + click, M - 1)
            else:
                last_click = click
        decision = pointer.copy()
        remaining = M - 1 - pointer
        pick = last_click & (remaining > 0)
        offset = np.floor(rng.random(trials) * np.maximum(remaining, 1)).astype(int) + 1
        decision[pick] = pointer[pick] + offset[pick]
        cond[k] = np.bincount(decision, minlength=M) / trials
    stderr = np.sqrt(cond * (1 - cond) / trials)
    return ProbabilityKernel.from_conditional(cond), stderr


def ff_kgr(N: int, alpha2: float, T: float, beta: float = 0.95,
           distance_km: float = float("nan")) -> KgrPoint:
    """Key rate of the N-copy feed-forward receiver at a fixed modulation energy."""
    kernel = cascade_conditional_probs(CascadeSpec(N, T * alpha2))
    return kgr_from_kernel(kernel, alpha2, T, beta, f"ff:{N}", distance_km=distance_km)
