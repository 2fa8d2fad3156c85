"""Independent check of the closed form by direct integration.

Each block obeys

    i dA/dt = V1 A + f1 e^{-i D2 t} B + f2 e^{-i D3 t} C
    i dB/dt = V2 B + f1 e^{+i D2 t} A
    i dC/dt = V2 C + f2 e^{+i D3 t} A

with A(0) = 1, B(0) = C(0) = 0. Substituting ``A = a e^{-i D2 t}`` and
``C = c e^{i (D3 - D2) t}`` makes the generator constant, so a classic RK4 step of
size h is the fixed matrix ``R = sum_{k<=4} (-i h H)^k / k!``. Runs of identical
steps are evaluated by powering ``R``, storing ``R - I`` to keep full relative
precision of the small per-step increment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .blocks import (
    BlockSolution,
    FockBlock,
    amplitudes_at,
    block_matrix,
    block_potentials,
    solve_block,
)
from .model import EffectiveModel
from .state import Truncation

TWO_PI = 2.0 * np.pi
# target global RK4 truncation error used to size the step
RK4_TARGET = 1e-12


@dataclass(frozen=True)
class BlockODE:
    v1: float | np.ndarray
    v2: float | np.ndarray
    f1: float | np.ndarray
    f2: float | np.ndarray
    delta2: float
    delta3: float

    @classmethod
    def from_model(cls, eff: EffectiveModel, block: FockBlock) -> "BlockODE":
        p = block_potentials(eff, block)
        return cls(p.v1, p.v2, p.f1, p.f2, eff.delta2, eff.delta3)

    def generator(self) -> np.ndarray:
        return block_matrix(self, self.delta2, self.delta3)


def step_bound(ode: BlockODE, t_end: float) -> np.ndarray:
    """Largest admissible RK4 step for each block.

    Combines the rule ``h <= min(1e-3, 1e-2 / max rate)`` with the step needed for
    a global truncation error of about ``RK4_TARGET`` over ``[0, t_end]``.
    """
    rates = np.max(
        np.abs(np.broadcast_arrays(ode.f1, ode.f2, ode.v2, ode.delta2, ode.delta3, 1.0)),
        axis=0,
    )
    h = np.minimum(1e-3, 1e-2 / rates)
    h0 = _centred(ode.generator())
    spread = np.max(np.sum(np.abs(h0), axis=-1), axis=-1)
    spread = np.maximum(spread, 1e-300)
    h_acc = (120.0 * RK4_TARGET / (max(t_end, 1.0) * spread**5)) ** 0.25
    return np.minimum(h, h_acc)


def _centred(h: np.ndarray) -> np.ndarray:
    tr = np.trace(h, axis1=-2, axis2=-1) / 3.0
    return h - tr[..., None, None] * np.eye(3)


def _rk4_increment(h0: np.ndarray, step) -> np.ndarray:
    """``R - I`` for one RK4 step of ``dy/dt = -i h0 y``."""
    m = -1j * np.asarray(step)[..., None, None] * h0
    term = m
    inc = m.copy()
    for k in range(2, 5):
        term = term @ m / k
        inc = inc + term
    return inc


def _power_increment(inc: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """``(I + inc)**counts - I`` per block, by binary powering of the increment."""
    counts = np.array(counts, dtype=np.int64, copy=True)
    result = np.zeros_like(inc)
    base = inc.copy()
    while np.any(counts > 0):
        odd = (counts & 1).astype(bool)
        if np.any(odd):
            prod = result + base + result @ base
            result = np.where(odd[..., None, None], prod, result)
        counts >>= 1
        if np.any(counts > 0):
            base = 2.0 * base + base @ base
    return result


def _phase(freq, t):
    return np.exp(1j * np.mod(freq * t, TWO_PI))


def integrate_block(ode: BlockODE, t_grid, step_scale: float = 1.0):
    """RK4 amplitudes ``(A, B, C)`` on ``t_grid``.

    Fields of ``ode`` may be arrays of shape ``(K,)``; the outputs then have shape
    ``(K, len(t_grid))``. ``step_scale`` multiplies the number of steps per
    interval (2 halves the step).
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t[0] != 0.0 or np.any(np.diff(t) < 0):
        raise ValueError("t_grid must be ascending from 0")
    gen = ode.generator()
    batch = gen.shape[:-2]
    shift = np.trace(gen, axis1=-2, axis2=-1) / 3.0
    h0 = gen - shift[..., None, None] * np.eye(3)
    h_max = step_bound(ode, float(t[-1]))
    if np.any(h_max < 1e-12):
        raise FloatingPointError("step size underflow; rates too large for RK4")

    y = np.zeros(batch + (3, t.size), dtype=complex)
    cur = np.zeros(batch + (3,), dtype=complex)
    cur[..., 0] = 1.0
    y[..., 0] = cur
    cache: dict[float, np.ndarray] = {}
    for j, dt in enumerate(np.diff(t), start=1):
        dt = float(dt)
        if dt == 0.0:
            y[..., j] = cur
            continue
        if dt not in cache:
            counts = np.ceil(dt / h_max * step_scale).astype(np.int64)
            inc = _rk4_increment(h0, dt / counts)
            cache[dt] = _power_increment(inc, counts)
        cur = cur + np.einsum("...ij,...j->...i", cache[dt], cur)
        y[..., j] = cur

    s = np.asarray(shift)[..., None]
    d2, d3 = ode.delta2, ode.delta3
    a = y[..., 0, :] * _phase(-(s + d2), t)
    b = y[..., 1, :] * _phase(-s, t)
    c = y[..., 2, :] * _phase(-(s + d2 - d3), t)
    return a, b, c


def integrate_block_literal(ode: BlockODE, t_grid, step: float = 1e-4):
    """Classic RK4 on the time-dependent equations as written (no frame change).

    Slow; meant for short windows to confirm the frame change used by
    :func:`integrate_block`. ``step`` is reduced so every interval holds a whole
    number of steps.
    """
    t = np.asarray(t_grid, dtype=float)
    v1, v2, f1, f2 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (ode.v1, ode.v2, ode.f1, ode.f2)))
    d2, d3 = ode.delta2, ode.delta3

    def rhs(tau, y):
        e2, e3 = np.exp(-1j * d2 * tau), np.exp(-1j * d3 * tau)
        a, b, c = y[..., 0], y[..., 1], y[..., 2]
        return -1j * np.stack(
            [
                v1 * a + f1 * e2 * b + f2 * e3 * c,
                v2 * b + f1 * np.conj(e2) * a,
                v2 * c + f2 * np.conj(e3) * a,
            ],
            axis=-1,
        )

    y = np.zeros(v1.shape + (3,), dtype=complex)
    y[..., 0] = 1.0
    out = np.zeros(v1.shape + (3, t.size), dtype=complex)
    out[..., 0] = y
    for j in range(1, t.size):
        t0, dt = t[j - 1], t[j] - t[j - 1]
        n = max(1, math.ceil(dt / step))
        h = dt / n
        for i in range(n):
            tau = t0 + i * h
            k1 = rhs(tau, y)
            k2 = rhs(tau + h / 2, y + h / 2 * k1)
            k3 = rhs(tau + h / 2, y + h / 2 * k2)
            k4 = rhs(tau + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[..., j] = y
    return out[..., 0, :], out[..., 1, :], out[..., 2, :]


def step_halving_change(ode: BlockODE, t_grid) -> float:
    """Max change of the oracle amplitudes when the step is halved."""
    full = integrate_block(ode, t_grid)
    half = integrate_block(ode, t_grid, step_scale=2.0)
    return float(max(np.max(np.abs(x - y)) for x, y in zip(full, half)))


@dataclass(frozen=True)
class VerificationReport:
    block: FockBlock
    max_abs_error: float
    passed: bool
    max_norm_drift: float = 0.0


def verify_block(
    eff: EffectiveModel,
    block: FockBlock,
    t_grid,
    tol: float = 1e-8,
    solution: BlockSolution | None = None,
) -> VerificationReport:
    """Compare closed-form and integrated amplitudes on ``t_grid``.

    Both paths use the same frame, so the amplitudes are compared directly as
    complex numbers, which is stricter than comparing moduli and phase-invariant
    products.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    sol = solution if solution is not None else solve_block(eff, block)
    closed = amplitudes_at(sol, np.asarray(t_grid, dtype=float))
    numeric = integrate_block(BlockODE.from_model(eff, block), t_grid)
    err = max(float(np.max(np.abs(x - y))) for x, y in zip(closed, numeric))
    drift = float(np.max(np.abs(1.0 - sum(np.abs(x) ** 2 for x in numeric))))
    return VerificationReport(block, err, bool(err <= tol), drift)


def oracle_grid_amplitudes(eff: EffectiveModel, trunc: Truncation, t_grid):
    """Integrated ``(A, B, C)`` for every block, shape ``(n1_max+1, n2_max+1, T)``."""
    n1, n2 = np.meshgrid(np.arange(trunc.n1_max + 1), np.arange(trunc.n2_max + 1), indexing="ij")
    shape = n1.shape
    ode = BlockODE.from_model(eff, FockBlock(n1.ravel(), n2.ravel()))
    a, b, c = integrate_block(ode, t_grid)
    t = len(np.atleast_1d(t_grid))
    return tuple(x.reshape(shape + (t,)) for x in (a, b, c))


@dataclass
class StructureReport:
    dimension: int
    nonzero: int
    off_block: list = field(default_factory=list)
    diagonal_mismatch: float = 0.0
    coupling_mismatch: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.off_block and self.diagonal_mismatch < 1e-12 and self.coupling_mismatch < 1e-12


def _destroy(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n)), k=1)


def interaction_operator(eff: EffectiveModel, trunc: Truncation) -> tuple[np.ndarray, list]:
    """Interaction operator at t = 0 over ``|level, n1, n2>`` with ``n2 <= n2_max + 1``.

    Built from operator algebra (Kronecker products of ladder operators),
    independently of the block formulas.
    """
    d1, d2 = trunc.n1_max + 1, trunc.n2_max + 2
    b1 = np.kron(_destroy(d1), np.eye(d2))
    b2 = np.kron(np.eye(d1), _destroy(d2))
    n1op, n2op = b1.T @ b1, b2.T @ b2
    kerr = eff.chi * (b1.T @ b1.T @ b1 @ b1 + b2.T @ b2.T @ b2 @ b2) + 2 * eff.chi * n1op @ n2op
    sig = lambda i, j: np.outer(np.eye(3)[i], np.eye(3)[j])  # noqa: E731
    coupling = eff.mu * (np.kron(sig(0, 1), b2) + eff.gamma * np.kron(sig(0, 2), b2))
    v = coupling + coupling.T + np.kron(np.eye(3), kerr)
    labels = [(lvl, i, k) for lvl in range(3) for i in range(d1) for k in range(d2)]
    return v, labels


def _block_of(label):
    lvl, n1, n2 = label
    if lvl == 0:
        return (n1, n2)
    if n2 == 0:
        return ("isolated", lvl, n1)
    return (n1, n2 - 1)


def interaction_matrix_blocks(eff: EffectiveModel, trunc: Truncation) -> StructureReport:
    """Scan the interaction operator for couplings outside the three-state blocks.

    Also checks the Kerr diagonal and the couplings against the block formulas.
    """
    if max(trunc.n1_max, trunc.n2_max) > 8:
        raise ValueError("structure scan is meant for n_max <= 8")
    v, labels = interaction_operator(eff, trunc)
    rows, cols = np.nonzero(np.abs(v) > 0)
    report = StructureReport(dimension=v.shape[0], nonzero=int(rows.size))
    for i, j in zip(rows, cols):
        if _block_of(labels[i]) != _block_of(labels[j]):
            report.off_block.append((labels[i], labels[j], complex(v[i, j])))
    index = {lab: k for k, lab in enumerate(labels)}
    for n1 in range(trunc.n1_max + 1):
        for n2 in range(trunc.n2_max + 1):
            p = block_potentials(eff, FockBlock(n1, n2))
            i0, i1, i2 = index[(0, n1, n2)], index[(1, n1, n2 + 1)], index[(2, n1, n2 + 1)]
            report.diagonal_mismatch = max(
                report.diagonal_mismatch,
                abs(v[i0, i0] - p.v1),
                abs(v[i1, i1] - p.v2),
                abs(v[i2, i2] - p.v2),
            )
            report.coupling_mismatch = max(
                report.coupling_mismatch, abs(v[i0, i1] - p.f1), abs(v[i0, i2] - p.f2)
            )
    return report
