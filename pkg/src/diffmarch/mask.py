"""Soft geodesic-ball masks and potential mass normalization.

A distance map u is turned into a differentiable segmentation mask by the
sigmoid relaxation of the unit-ball indicator,

    mask(u) = 1 - 1 / (1 + exp(-(u - 1) / delta)),

which tends to the characteristic function of {u <= 1} as delta -> 0.  The
potential can additionally be rescaled so its discrete L1 mass
``h^2 * sum |phi_p|`` never exceeds a bound lambda (identity when already
below the bound).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import NumericalError, ValidationError
from .grid import PotentialField, ScalarField
from .gradient import GradientField
from .solver import DistanceField

MASS_BOUND_DEFAULT = 5.0


@dataclass(frozen=True)
class SoftMask(ScalarField):
    """Sigmoid-relaxed unit-ball mask; value 0.5 exactly where u = 1.

    Values lie in (0, 1) mathematically; in float64 they saturate to 0.0 or
    1.0 once |u - 1| exceeds roughly 37 * delta.
    """

    delta: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        if not self.delta > 0.0:
            raise ValidationError(f"delta out of range: {self.delta!r} (need > 0)")
        if (self.values < 0.0).any() or (self.values > 1.0).any():
            raise ValidationError("mask values must lie in [0, 1]")


def soft_mask(field: DistanceField, delta: float) -> SoftMask:
    """Pointwise sigmoid mask of the distance map, sharpness ``delta``."""
    delta = float(delta)
    if not delta > 0.0:
        raise ValidationError(f"delta out of range: {delta!r} (need > 0)")
    values = expit((1.0 - field.u) / delta)
    return SoftMask(field.grid, values, delta=delta)


def soft_mask_vjp(field: DistanceField, delta: float, mask_bar: ScalarField) -> ScalarField:
    """Chain rule through the soft mask: d(loss)/d(u) from d(loss)/d(mask).

    d(mask)/d(u) = -s(1-s)/delta with s = sigmoid((u-1)/delta).  s(1-s) is
    evaluated as exp(-|z|)/(1+exp(-|z|))^2, which keeps the tails accurate
    far beyond where the mask itself saturates in float64.
    """
    delta = float(delta)
    if not delta > 0.0:
        raise ValidationError(f"delta out of range: {delta!r} (need > 0)")
    if mask_bar.grid != field.grid:
        raise ValidationError("mask_bar is defined on a different grid")
    z = (field.u - 1.0) / delta
    t = np.exp(-np.abs(z))
    sig_prime = t / (1.0 + t) ** 2
    return ScalarField(field.grid, mask_bar.values * (-sig_prime / delta))


def potential_mass(phi: PotentialField) -> float:
    """Discrete L1 norm of the potential, ``h^2 * sum |phi_p|``."""
    return float(phi.grid.h * phi.grid.h * np.abs(phi.values).sum())


def normalize_potential(
    phi: PotentialField, lam: float = MASS_BOUND_DEFAULT
) -> tuple[PotentialField, float]:
    """Rescale phi so its L1 mass is at most lam; identity when already so.

    Returns the (possibly rescaled) potential and the applied scale, which
    is 1 exactly when the mass is <= lam (ties inclusive).
    """
    lam = float(lam)
    if not lam > 0.0:
        raise ValidationError(f"lambda out of range: {lam!r} (need > 0)")
    mass = potential_mass(phi)
    if mass <= lam:
        return phi, 1.0
    scale = lam / mass
    out = phi.values * scale
    # Per-element rounding can leave the rescaled mass a few ulps above the
    # bound, which would make a second application rescale again; nudge the
    # scale down until the bound holds so reapplication is a no-op.
    h2 = phi.grid.h * phi.grid.h
    guard = 0
    while h2 * np.abs(out).sum() > lam:
        scale = np.nextafter(scale, 0.0)
        out = phi.values * scale
        guard += 1
        if guard > 64:
            raise NumericalError("potential mass normalization failed to settle")
    return PotentialField(phi.grid, out), scale


def normalize_potential_vjp(
    phi: PotentialField, lam: float, phi_out_bar: ScalarField
) -> GradientField:
    """Exact gradient of the clamped rescaling.

    Inactive branch (mass <= lam): identity on the cotangent.  Active
    branch: with s = lam/mass and out = s*phi (phi strictly positive),

        g_p = s * bar_p - (h^2 / mass) * <bar, out>.
    """
    lam = float(lam)
    if not lam > 0.0:
        raise ValidationError(f"lambda out of range: {lam!r} (need > 0)")
    if phi_out_bar.grid != phi.grid:
        raise ValidationError("cotangent is defined on a different grid")
    mass = potential_mass(phi)
    bar = phi_out_bar.values
    if mass <= lam:
        return GradientField(phi.grid, bar.copy())
    scale = lam / mass
    out = phi.values * scale
    h2 = phi.grid.h * phi.grid.h
    g = scale * bar - (h2 / mass) * float(np.dot(bar, out))
    return GradientField(phi.grid, g)
