"""Closed-form dynamics inside one Fock block.

The block spanned by ``|1,n1,n2>, |2,n1,n2+1>, |3,n1,n2+1>`` evolves independently
of every other block. Its amplitudes are sums of three phase factors whose
frequencies are the roots of a real cubic, obtained with the trigonometric
Cardano formula.

Every function here broadcasts over numpy arrays, so a whole ``(n1, n2)`` grid is
handled in one call by passing integer arrays for the photon numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import EffectiveModel

TWO_PI = 2.0 * np.pi

# relative floor on x1**2 - 3 x2 below which the cubic has a (near) triple root
DISCRIMINANT_FLOOR = 1e-14
# relative floor on pairwise root separation used by the Upsilon formula
SEPARATION_FLOOR = 1e-10
ACOS_SLACK = 1e-12
# f2 / max|u| below which the C coefficient switches to its division-free form
WEAK_COUPLING = 1e-2


class DegenerateRootsError(ArithmeticError):
    """The cubic has (near-)coincident roots; use the spectral fallback."""


@dataclass(frozen=True)
class FockBlock:
    n1: int | np.ndarray
    n2: int | np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.n1) < 0) or np.any(np.asarray(self.n2) < 0):
            raise ValueError("photon numbers must be non-negative")


@dataclass(frozen=True)
class BlockPotentials:
    v1: float | np.ndarray
    v2: float | np.ndarray
    f1: float | np.ndarray
    f2: float | np.ndarray


@dataclass(frozen=True)
class CubicRoots:
    theta_m: np.ndarray  # shape (..., 3), in the m = 1, 2, 3 order
    phi: float | np.ndarray


@dataclass(frozen=True)
class BlockSolution:
    """Roots and weights of one block (or a grid of blocks).

    ``shifted`` holds the roots measured from ``-V2`` (``theta_m + V2``); the
    amplitude formulas use it directly to avoid cancelling the large Kerr shift.
    """

    block: FockBlock
    potentials: BlockPotentials
    roots: CubicRoots
    upsilon: np.ndarray  # shape (..., 3)
    delta2: float
    delta3: float
    shifted: np.ndarray | None = None

    def __post_init__(self):
        if self.shifted is None:
            v2 = np.asarray(self.potentials.v2, dtype=float)[..., None]
            object.__setattr__(self, "shifted", self.roots.theta_m + v2)


def block_potentials(eff: EffectiveModel, block: FockBlock) -> BlockPotentials:
    n1 = np.asarray(block.n1, dtype=float)
    n2 = np.asarray(block.n2, dtype=float)
    v1 = eff.chi * (n1 * (n1 - 1) + n2 * (n2 - 1) + 2 * n1 * n2)
    v2 = eff.chi * (n1 * (n1 - 1) + n2 * (n2 + 1) + 2 * n1 * (n2 + 1))
    f1 = eff.mu * np.sqrt(n2 + 1)
    return BlockPotentials(v1=v1, v2=v2, f1=f1, f2=eff.gamma * f1)


def cubic_coefficients(p: BlockPotentials, delta2: float, delta3: float):
    """Coefficients ``(x1, x2, x3)`` of ``theta**3 + x1 theta**2 + x2 theta + x3``."""
    v1, v2, f1, f2 = p.v1, p.v2, p.f1, p.f2
    d32 = delta3 - delta2
    ff = f1 * f1 + f2 * f2
    x1 = v1 + 2 * v2 + d32 - delta2
    x2 = (v1 + v2 - delta2) * (v2 + d32) + v2 * (v1 - delta2) - ff
    x3 = v2 * ((v1 - delta2) * (v2 + d32) - ff) - f1 * f1 * d32
    return x1, x2, x3


def _cardano(x1, x2, x3):
    """Trigonometric roots and a mask flagging degenerate discriminants."""
    x1, x2, x3 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (x1, x2, x3)))
    disc = x1 * x1 - 3.0 * x2
    degenerate = disc <= DISCRIMINANT_FLOOR * np.maximum(1.0, x1 * x1)
    safe = np.where(degenerate, 1.0, disc)
    arg = (9.0 * x1 * x2 - 2.0 * x1**3 - 27.0 * x3) / (2.0 * safe**1.5)
    if np.any((np.abs(arg) > 1.0 + ACOS_SLACK) & ~degenerate):
        raise ArithmeticError("cubic does not have three real roots")
    phi = np.arccos(np.clip(arg, -1.0, 1.0)) / 3.0
    offsets = TWO_PI * np.arange(3) / 3.0
    amp = (2.0 / 3.0) * np.sqrt(safe)
    roots = -x1[..., None] / 3.0 + amp[..., None] * np.cos(phi[..., None] + offsets)
    roots = np.where(degenerate[..., None], -x1[..., None] / 3.0, roots)
    return roots, phi, degenerate


def solve_cubic(x1, x2, x3) -> CubicRoots:
    """Three real roots of ``theta**3 + x1 theta**2 + x2 theta + x3 = 0``.

    Roots keep the cosine-offset order ``0, 2pi/3, 4pi/3`` and are never sorted.

    Raises
    ------
    DegenerateRootsError
        If ``x1**2 - 3 x2`` is too small for the trigonometric form.
    """
    roots, phi, degenerate = _cardano(x1, x2, x3)
    if np.any(degenerate):
        raise DegenerateRootsError("x1**2 - 3*x2 vanishes; roots are (near) triple")
    return CubicRoots(theta_m=roots, phi=phi)


def _pair_differences(th):
    """``(th_m - th_k) * (th_m - th_l)`` for the cyclic complement ``{k, l}`` of m."""
    k = th[..., [1, 2, 0]]
    l = th[..., [2, 0, 1]]
    return (th - k) * (th - l), k + l


def _separation_ok(th):
    d = np.abs(th[..., [0, 1, 2]] - th[..., [1, 2, 0]])
    scale = np.maximum(1.0, np.max(np.abs(th), axis=-1))
    return np.all(d > SEPARATION_FLOOR * scale[..., None], axis=-1)


def upsilon(roots: CubicRoots, p: BlockPotentials, delta2: float) -> np.ndarray:
    """Weights fixed by ``A(0) = 1, B(0) = C(0) = 0``.

    Raises
    ------
    DegenerateRootsError
        If two roots nearly coincide.
    """
    th = roots.theta_m
    if not np.all(_separation_ok(th)):
        raise DegenerateRootsError("near-coincident roots")
    denom, kl = _pair_differences(th)
    num = kl + (np.asarray(p.v1) + np.asarray(p.v2) - delta2)[..., None]
    return num / denom


def shifted_cubic_coefficients(p: BlockPotentials, delta2: float, delta3: float):
    """Coefficients of the same cubic in ``u = theta + V2``.

    Substituting ``theta = u - V2`` leaves only the small differences
    ``V1 - V2 - D2`` and ``D3 - D2``, so the roots keep their absolute accuracy
    even when the Kerr shifts are large.
    """
    a = np.asarray(p.v1, dtype=float) - p.v2 - delta2
    c = np.asarray(delta3 - delta2, dtype=float)
    f1sq = np.asarray(p.f1, dtype=float) ** 2
    ff = f1sq + np.asarray(p.f2, dtype=float) ** 2
    return a + c, a * c - ff, -f1sq * c


def block_matrix(p: BlockPotentials, delta2: float, delta3: float) -> np.ndarray:
    """Time-independent generator of the block in the frame ``(A e^{i D2 t}, B, C e^{i (D2 - D3) t})``.

    In that frame ``i dy/dt = H y`` and the eigenvalues of ``H`` are minus the
    cubic roots.
    """
    v1, v2, f1, f2 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (p.v1, p.v2, p.f1, p.f2)))
    h = np.zeros(v1.shape + (3, 3))
    h[..., 0, 0] = v1 - delta2
    h[..., 1, 1] = v2
    h[..., 2, 2] = v2 + delta3 - delta2
    h[..., 0, 1] = h[..., 1, 0] = f1
    h[..., 0, 2] = h[..., 2, 0] = f2
    return h


def _spectral_roots_and_upsilon(p: BlockPotentials, delta2: float, delta3: float):
    """Shifted roots and weights from a direct eigen-decomposition of the block matrix."""
    v2 = np.asarray(p.v2, dtype=float)
    h = block_matrix(p, delta2, delta3) - v2[..., None, None] * np.eye(3)
    lam, vec = np.linalg.eigh(h)
    f1 = np.asarray(p.f1, dtype=float)
    # B(t) = sum_m U[1,m] U[0,m] e^{-i lam_m t} = f1 sum_m Upsilon_m e^{i theta_m t}
    ups = vec[..., 1, :] * vec[..., 0, :] / f1[..., None]
    return -lam, ups


def solve_block(eff: EffectiveModel, block: FockBlock) -> BlockSolution:
    """Roots and weights for one block or a grid of blocks.

    Blocks whose cubic is (nearly) degenerate are solved by diagonalising the
    3x3 block matrix instead; the result has the same form.
    """
    p = block_potentials(eff, block)
    v2 = np.asarray(p.v2, dtype=float)
    y1, y2, y3 = shifted_cubic_coefficients(p, eff.delta2, eff.delta3)
    u, phi, degenerate = _cardano(y1, y2, y3)
    bad = degenerate | ~_separation_ok(u)
    if np.any(bad):
        u_s, ups_s = _spectral_roots_and_upsilon(p, eff.delta2, eff.delta3)
        u = np.where(bad[..., None], np.broadcast_to(u_s, u.shape), u)
    # Upsilon in shifted variables: numerator u_k + u_l + V1 - V2 - D2
    denom, kl = _pair_differences(np.where(bad[..., None], 1.0 + np.arange(3), u))
    ups = (kl + (np.asarray(p.v1) - v2 - eff.delta2)[..., None]) / denom
    if np.any(bad):
        ups = np.where(bad[..., None], np.broadcast_to(ups_s, u.shape), ups)
    return BlockSolution(
        block=block,
        potentials=p,
        roots=CubicRoots(theta_m=u - v2[..., None], phi=phi),
        upsilon=ups,
        delta2=eff.delta2,
        delta3=eff.delta3,
        shifted=u,
    )


def _phase(freq, t):
    """``exp(i freq t)`` with the phase reduced modulo 2 pi before exponentiation."""
    return np.exp(1j * np.mod(freq * t, TWO_PI))


def amplitude_coefficients(sol: BlockSolution):
    """Per-root coefficients ``(cA, cB, cC)`` and frequencies ``(wA, wB, wC)``."""
    th = sol.roots.theta_m
    u = sol.shifted  # theta + V2
    ups = sol.upsilon
    p = sol.potentials
    v1, v2, f1, f2 = (np.asarray(x, dtype=float)[..., None] for x in (p.v1, p.v2, p.f1, p.f2))
    d2, d3 = sol.delta2, sol.delta3
    c_a = -u * ups
    c_b = f1 * ups
    with np.errstate(divide="ignore", invalid="ignore"):
        c_c = (u * (u + (v1 - v2 - d2)) - f1 * f1) * ups / f2
        # For weak level-3 coupling the numerator above cancels. The C equation gives
        # the same coefficient as f2 u Upsilon / (u + D3 - D2); that form is used for the
        # two coupled roots and C(0) = 0 fixes the nearly decoupled one.
        uc = u + (d3 - d2)
        scale = np.maximum(1.0, np.max(np.abs(u), axis=-1, keepdims=True))
        weak = f2 < WEAK_COUPLING * scale
        if np.any(weak):
            alt = f2 * u * ups / uc
            lone = np.argmin(np.abs(uc), axis=-1)[..., None] == np.arange(3)
            alt = np.where(lone, 0.0, alt)
            alt = np.where(lone, -np.sum(alt, axis=-1, keepdims=True), alt)
            c_c = np.where(weak, alt, c_c)
        c_c = np.where(f2 == 0.0, 0.0, c_c)
    return (c_a, c_b, c_c), (th - d2, th, th + d3 - d2)


def amplitudes_at(sol: BlockSolution, t):
    """Amplitudes ``(A, B, C)`` at time(s) ``t``.

    ``t`` may be a scalar or an array; an array adds a trailing time axis to the
    block shape.
    """
    coeffs, freqs = amplitude_coefficients(sol)
    t = np.asarray(t, dtype=float)
    out = []
    for c, w in zip(coeffs, freqs):
        if t.ndim == 0:
            out.append(np.sum(c * _phase(w, t), axis=-1))
        else:
            out.append(np.einsum("...m,...mt->...t", c, _phase(w[..., None], t)))
    return tuple(out)


def with_upsilon(sol: BlockSolution, upsilon_values) -> BlockSolution:
    """Copy of ``sol`` with replaced weights (used for sensitivity checks)."""
    return replace(sol, upsilon=np.asarray(upsilon_values))


def initial_residuals(sol: BlockSolution):
    """``(A(0) - 1, B(0), C(0))`` reconstructed from the weights."""
    (c_a, c_b, c_c), _ = amplitude_coefficients(sol)
    return np.sum(c_a, axis=-1) - 1.0, np.sum(c_b, axis=-1), np.sum(c_c, axis=-1)
