"""Atomic inversion and entanglement measures of the reduced atomic state."""

from __future__ import annotations

import numpy as np

from .state import AtomicDensity

NEGATIVE_SLACK = 1e-12
TRIPLE_FLOOR = 1e-14
CLOSE_ROOTS = 1e-4


class CorruptDensityError(ArithmeticError):
    """Eigenvalues too negative for a density matrix."""


def inversion(rho: AtomicDensity) -> float:
    r = rho.rho
    return float(np.real(r[0, 0] - r[1, 1] - r[2, 2]))


def characteristic_coefficients(rho: np.ndarray) -> tuple[float, float, float]:
    """``(xi1, xi2, xi3)`` of ``zeta**3 + xi1 zeta**2 + xi2 zeta + xi3``."""
    r = rho
    xi1 = -(r[0, 0] + r[1, 1] + r[2, 2])
    xi2 = (
        r[0, 0] * r[1, 1] + r[1, 1] * r[2, 2] + r[2, 2] * r[0, 0]
        - r[0, 1] * r[1, 0] - r[1, 2] * r[2, 1] - r[2, 0] * r[0, 2]
    )
    xi3 = (
        -r[0, 0] * r[1, 1] * r[2, 2] - r[0, 1] * r[1, 2] * r[2, 0] - r[0, 2] * r[2, 1] * r[1, 0]
        + r[0, 0] * r[1, 2] * r[2, 1] + r[1, 1] * r[2, 0] * r[0, 2] + r[2, 2] * r[0, 1] * r[1, 0]
    )
    return float(np.real(xi1)), float(np.real(xi2)), float(np.real(xi3))


def jacobi_eigvalsh(a: np.ndarray, tol: float = 1e-15, max_sweeps: int = 50) -> np.ndarray:
    """Eigenvalues of a small Hermitian matrix by cyclic Jacobi rotations, descending."""
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(a - np.diag(np.diag(a))) ** 2))
        if off <= tol * max(1.0, np.sqrt(np.sum(np.abs(a) ** 2))):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) == 0.0:
                    continue
                # unitary rotation zeroing a[p, q]; the phase makes the pivot real
                phase = apq / abs(apq)
                app, aqq = a[p, p].real, a[q, q].real
                tau = (aqq - app) / (2.0 * abs(apq))
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau)) if tau != 0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                g = np.eye(n, dtype=complex)
                g[p, p] = c
                g[q, q] = c
                g[p, q] = s * phase
                g[q, p] = -s * np.conj(phase)
                a = g.conj().T @ a @ g
    return np.sort(np.real(np.diag(a)))[::-1]


def cardano_eigenvalues(rho: np.ndarray) -> np.ndarray:
    """Roots of the characteristic cubic by the trigonometric formula, unsorted and unclamped.

    ``rho`` should have unit trace. Near-triple roots (``xi1**2 - 3 xi2`` below
    ``1e-14``) return the common value ``-xi1 / 3``.
    """
    xi1, xi2, xi3 = characteristic_coefficients(rho)
    d = xi1 * xi1 - 3.0 * xi2
    if d < TRIPLE_FLOOR:
        return np.full(3, -xi1 / 3.0)
    arg = (9.0 * xi1 * xi2 - 2.0 * xi1**3 - 27.0 * xi3) / (2.0 * d**1.5)
    varrho = np.arccos(np.clip(arg, -1.0, 1.0)) / 3.0
    j = np.arange(3)
    return -xi1 / 3.0 + (2.0 / 3.0) * np.sqrt(d) * np.cos(varrho + 2.0 * np.pi * j / 3.0)


def atomic_eigenvalues(rho: AtomicDensity) -> np.ndarray:
    """Eigenvalues of the trace-normalised atomic density, descending.

    The trigonometric Cardano form is used unless two roots lie within
    ``1e-4`` of each other. A double root of the cubic is only resolved to
    about ``sqrt(machine eps)`` from the coefficients, so those densities go to
    the Jacobi eigensolver instead. Values in ``[-1e-12, 0)`` are clamped to zero.

    Raises
    ------
    CorruptDensityError
        If an eigenvalue is more negative than the clamp allows.
    """
    r = rho.normalized().rho
    zeta = np.sort(cardano_eigenvalues(r))
    if np.min(np.diff(zeta)) < CLOSE_ROOTS:
        zeta = np.sort(jacobi_eigvalsh(r))
    if np.any(zeta < -NEGATIVE_SLACK):
        raise CorruptDensityError(f"negative eigenvalue {zeta.min():.3e}")
    return np.clip(zeta, 0.0, None)[::-1]


def von_neumann_entropy(zeta) -> float:
    """``-sum zeta ln zeta`` with ``0 ln 0 = 0`` (natural log)."""
    z = np.asarray(zeta, dtype=float)
    z = z[z > 0]
    return float(-np.sum(z * np.log(z)))


def linear_entropy(rho: AtomicDensity) -> float:
    """``1 - Tr rho**2`` of the trace-normalised density; at most 2/3 for a qutrit."""
    r = rho.normalized().rho
    return float(1.0 - np.real(np.sum(r * r.T)))
