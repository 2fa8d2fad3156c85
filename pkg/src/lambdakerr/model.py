"""Lab-frame parameters and the canonical mode rotation.

The two cavity modes are mixed by a real rotation ``a1 = b1 cos(theta) + b2 sin(theta)``,
``a2 = b2 cos(theta) - b1 sin(theta)``. With the angle chosen so that ``tan(theta)``
equals the common coupling ratio ``delta``, the transformed mode ``b1`` decouples
from the atom and the field-field exchange term vanishes. All rates are expressed
in units of the base coupling ``g`` (hbar = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class SingularRatioError(ValueError):
    """Raised when the coupling ratio satisfies delta**2 == 1."""


@dataclass(frozen=True)
class RawModel:
    """Lab-frame parameters.

    Attributes
    ----------
    omega_atom : tuple of 3 floats
        Atomic level energies (omega_1, omega_2, omega_3).
    omega_field : tuple of 2 floats
        Mode frequencies (Omega_1, Omega_2).
    g : float
        Base coupling g_1^(2) > 0.
    gamma_ratio : float
        g_2^(2) / g_1^(2).
    delta_ratio : float
        g_1^(1) / g_1^(2) = g_2^(1) / g_2^(2); must not equal +-1.
    chi : float
        Kerr self-action rate; cross-action is fixed at 2 * chi.
    """

    omega_atom: tuple[float, float, float]
    omega_field: tuple[float, float]
    g: float = 1.0
    gamma_ratio: float = 1.0
    delta_ratio: float = 0.0
    chi: float = 0.0

    def __post_init__(self):
        if len(self.omega_atom) != 3 or len(self.omega_field) != 2:
            raise ValueError("need 3 atomic energies and 2 mode frequencies")
        if not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")
        if self.chi < 0:
            raise ValueError(f"chi must be non-negative, got {self.chi}")
        _check_ratio(self.delta_ratio)

    @property
    def couplings(self) -> np.ndarray:
        """Atom-field couplings ``g[k-1, j-1] = g_k^(j)`` (transition k, mode j)."""
        g, gam, d = self.g, self.gamma_ratio, self.delta_ratio
        return np.array([[d * g, g], [d * gam * g, gam * g]])

    @property
    def chi_cross(self) -> float:
        return 2.0 * self.chi


@dataclass(frozen=True)
class EffectiveModel:
    """Interaction-picture parameters, in units of g."""

    mu: float = 1.0
    gamma: float = 1.0
    delta2: float = 0.0
    delta3: float = 0.0
    chi: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.chi < 0:
            raise ValueError(f"chi must be non-negative, got {self.chi}")


def _check_ratio(delta: float) -> None:
    if abs(delta * delta - 1.0) == 0.0:
        raise SingularRatioError("coupling ratio delta**2 == 1 makes g12 singular")


def field_field_coupling(raw: RawModel) -> float:
    """Field-field exchange rate ``g12 = delta (Omega2 - Omega1) / (1 - delta**2)``."""
    d = raw.delta_ratio
    _check_ratio(d)
    w1, w2 = raw.omega_field
    return d * (w2 - w1) / (1.0 - d * d)


def rotation_angle(raw: RawModel) -> float:
    """Mode-mixing angle that removes the field-field term.

    Uses the principal branch of ``0.5 * arctan(2 g12 / (Omega2 - Omega1))`` for
    ``|delta| < 1`` and shifts by ``+-pi/2`` for ``|delta| > 1``, so the result always
    satisfies ``tan(theta) = delta``. For degenerate modes (``Omega1 == Omega2``) the
    quotient is replaced by its limit ``2 delta / (1 - delta**2)``.
    """
    d = raw.delta_ratio
    g12 = field_field_coupling(raw)
    w1, w2 = raw.omega_field
    if w2 != w1:
        ratio = 2.0 * g12 / (w2 - w1)
    else:
        ratio = 2.0 * d / (1.0 - d * d)
    theta = 0.5 * math.atan(ratio)
    if abs(d) > 1.0:
        theta += math.copysign(0.5 * math.pi, d)
    return theta


def transformed_frequencies(raw: RawModel, theta: float) -> tuple[float, float]:
    g12 = field_field_coupling(raw)
    w1, w2 = raw.omega_field
    c2, s2 = math.cos(theta) ** 2, math.sin(theta) ** 2
    s2t = math.sin(2.0 * theta)
    return (w1 * c2 + w2 * s2 - g12 * s2t, w1 * s2 + w2 * c2 + g12 * s2t)


def effective_couplings(raw: RawModel, theta: float) -> np.ndarray:
    """Rotated couplings ``mu[k-1, j-1] = mu_k^(j)``.

    Column 0 holds the couplings to ``b1`` (zero at the decoupling angle),
    column 1 the couplings to ``b2``.
    """
    g = raw.couplings
    c, s = math.cos(theta), math.sin(theta)
    mu = np.empty((2, 2))
    mu[:, 0] = g[:, 0] * c - g[:, 1] * s
    mu[:, 1] = g[:, 0] * s + g[:, 1] * c
    return mu


def derive_effective(raw: RawModel) -> EffectiveModel:
    """Reduce lab-frame parameters to the interaction-picture model.

    The returned rates keep the units of ``raw``; divide by ``raw.g`` to get
    the dimensionless form used by the CLI.
    """
    theta = rotation_angle(raw)
    _, big_w2 = transformed_frequencies(raw, theta)
    w1, w2, w3 = raw.omega_atom
    mu = raw.g * math.sqrt(1.0 + raw.delta_ratio**2)
    return EffectiveModel(
        mu=mu,
        gamma=raw.gamma_ratio,
        delta2=big_w2 - (w1 - w2),
        delta3=big_w2 - (w1 - w3),
        chi=raw.chi,
    )


def rotate_coherent_amplitudes(alpha1: complex, alpha2: complex, theta: float) -> tuple[complex, complex]:
    """Coherent amplitudes of the rotated modes ``b1, b2`` for lab amplitudes ``alpha1, alpha2``."""
    c, s = math.cos(theta), math.sin(theta)
    return (alpha1 * c - alpha2 * s, alpha1 * s + alpha2 * c)
