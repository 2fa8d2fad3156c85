"""Tripartite state on a truncated two-mode Fock grid."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .blocks import BlockSolution, FockBlock, amplitudes_at, solve_block
from .model import EffectiveModel


@dataclass(frozen=True)
class CoherentSpec:
    """Coherent amplitudes of the transformed modes ``b1, b2``."""

    alpha1: complex = 0.0
    alpha2: complex = 0.0

    @classmethod
    def from_intensities(cls, n1: float, n2: float, phase1: float = 0.0, phase2: float = 0.0):
        return cls(
            alpha1=complex(math.sqrt(n1) * np.exp(1j * phase1)),
            alpha2=complex(math.sqrt(n2) * np.exp(1j * phase2)),
        )


@dataclass(frozen=True)
class Truncation:
    n1_max: int
    n2_max: int
    tail_mass: float = 0.0

    def __post_init__(self):
        if self.n1_max < 0 or self.n2_max < 0:
            raise ValueError("cutoffs must be non-negative")


@dataclass(frozen=True, eq=False)
class SystemState:
    """Weighted amplitudes at one time.

    ``amp1[n1, n2]`` multiplies ``|1, n1, n2>``; ``amp2[n1, n2]`` and ``amp3[n1, n2]``
    multiply ``|2, n1, n2+1>`` and ``|3, n1, n2+1>``.
    """

    time: float
    amp1: np.ndarray
    amp2: np.ndarray
    amp3: np.ndarray
    tail_mass: float = 0.0


@dataclass(frozen=True, eq=False)
class AtomicDensity:
    rho: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    def normalized(self) -> "AtomicDensity":
        return AtomicDensity(self.rho / self.trace)


def coherent_weights(alpha: complex, n_max: int) -> np.ndarray:
    """``q_n = exp(-|alpha|**2 / 2) alpha**n / sqrt(n!)`` for ``n = 0..n_max``."""
    q = np.empty(n_max + 1, dtype=complex)
    q[0] = math.exp(-abs(alpha) ** 2 / 2.0)
    for n in range(1, n_max + 1):
        q[n] = q[n - 1] * alpha / math.sqrt(n)
    return q


def _poisson_cutoff(mean: float, eps: float) -> tuple[int, float]:
    """Smallest ``n`` whose Poisson tail ``P(N > n)`` is below ``eps``, and that tail."""
    if mean == 0.0:
        return 0, 0.0
    p = math.exp(-mean)
    n = 0
    # the tail is summed directly rather than as 1 - cdf, which cancels below ~1e-16
    while True:
        tail = _poisson_tail(mean, n, p)
        if tail < eps:
            return n, tail
        n += 1
        p *= mean / n


def _poisson_tail(mean: float, n: int, p_n: float) -> float:
    """``sum_{k > n} P(k)`` by forward summation of the terms."""
    total = 0.0
    term = p_n
    k = n
    while True:
        k += 1
        term *= mean / k
        total += term
        if term < 1e-18 * max(total, 1e-300) or term == 0.0:
            return total


def auto_truncation(spec: CoherentSpec, eps: float = 1e-10) -> Truncation:
    """Per-mode cutoffs with Poisson tail below ``eps``."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    n1, t1 = _poisson_cutoff(abs(spec.alpha1) ** 2, eps)
    n2, t2 = _poisson_cutoff(abs(spec.alpha2) ** 2, eps)
    return Truncation(n1, n2, tail_mass=t1 + t2 - t1 * t2)


def fixed_truncation(spec: CoherentSpec, n1_max: int, n2_max: int) -> Truncation:
    """Truncation at given cutoffs with the discarded Poisson mass filled in."""
    w1 = np.sum(np.abs(coherent_weights(spec.alpha1, n1_max)) ** 2)
    w2 = np.sum(np.abs(coherent_weights(spec.alpha2, n2_max)) ** 2)
    return Truncation(n1_max, n2_max, tail_mass=max(0.0, 1.0 - w1 * w2))


@lru_cache(maxsize=32)
def grid_solution(eff: EffectiveModel, n1_max: int, n2_max: int) -> BlockSolution:
    """Block solutions for every ``(n1, n2)`` on the grid; cached per parameter set."""
    n1, n2 = np.meshgrid(np.arange(n1_max + 1), np.arange(n2_max + 1), indexing="ij")
    return solve_block(eff, FockBlock(n1, n2))


def _weights(spec: CoherentSpec, trunc: Truncation) -> np.ndarray:
    return np.outer(coherent_weights(spec.alpha1, trunc.n1_max), coherent_weights(spec.alpha2, trunc.n2_max))


def evolve(eff: EffectiveModel, spec: CoherentSpec, trunc: Truncation, t: float) -> SystemState:
    if t < 0:
        raise ValueError("time must be non-negative")
    sol = grid_solution(eff, trunc.n1_max, trunc.n2_max)
    a, b, c = amplitudes_at(sol, t)
    w = _weights(spec, trunc)
    return SystemState(float(t), w * a, w * b, w * c, trunc.tail_mass)


def evolve_many(eff: EffectiveModel, spec: CoherentSpec, trunc: Truncation, times) -> list[SystemState]:
    """States at several times; the block solution is computed once."""
    return [evolve(eff, spec, trunc, float(t)) for t in times]


def state_from_amplitudes(spec: CoherentSpec, trunc: Truncation, t: float, a, b, c) -> SystemState:
    """Assemble a state from per-block amplitudes of shape ``(n1_max+1, n2_max+1)``."""
    w = _weights(spec, trunc)
    return SystemState(float(t), w * a, w * b, w * c, trunc.tail_mass)


def norm(state: SystemState) -> float:
    return float(sum(np.sum(np.abs(x) ** 2) for x in (state.amp1, state.amp2, state.amp3)))


def atomic_density(state: SystemState) -> AtomicDensity:
    """Reduced atomic density matrix, tracing out both modes.

    Level-1 amplitude ``amp1[n1, n2]`` and level-2/3 amplitude ``amp2[n1, n2-1]``
    share the field state ``|n1, n2>``, so off-diagonal elements pair them with a
    one-step shift in ``n2``.
    """
    a, b, c = state.amp1, state.amp2, state.amp3
    rho = np.empty((3, 3), dtype=complex)
    rho[0, 0] = np.sum(np.abs(a) ** 2)
    rho[1, 1] = np.sum(np.abs(b) ** 2)
    rho[2, 2] = np.sum(np.abs(c) ** 2)
    rho[0, 1] = np.sum(a[:, 1:] * np.conj(b[:, :-1]))
    rho[0, 2] = np.sum(a[:, 1:] * np.conj(c[:, :-1]))
    rho[1, 2] = np.sum(b * np.conj(c))
    rho[1, 0] = np.conj(rho[0, 1])
    rho[2, 0] = np.conj(rho[0, 2])
    rho[2, 1] = np.conj(rho[1, 2])
    return AtomicDensity(rho)


def field_vectors(state: SystemState) -> np.ndarray:
    """Field components ``<i|psi>`` for each atomic level on a common ``(n1, n2)`` grid.

    Returns an array of shape ``(3, n1_max+1, n2_max+2)``.
    """
    n1, n2 = state.amp1.shape
    out = np.zeros((3, n1, n2 + 1), dtype=complex)
    out[0, :, :-1] = state.amp1
    out[1, :, 1:] = state.amp2
    out[2, :, 1:] = state.amp3
    return out


def field_gram(state: SystemState) -> np.ndarray:
    """Gram matrix ``G[i, j] = <psi_i | psi_j>`` of the field components.

    Its spectrum is that of the transposed atomic density matrix and so equals the
    non-zero spectrum of the field's reduced density matrix.
    """
    v = field_vectors(state).reshape(3, -1)
    return v.conj() @ v.T
