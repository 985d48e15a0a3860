"""Perfectly matched layer: complex stretching, modeling constants, calibration.

Above the transparent-boundary line y = b the vertical coordinate is
complex-stretched with the medium function

    rho(y) = 1                                   for y <= b,
             1 + sigma * ((y - b)/delta)^m       for b < y <= b + delta,

where sigma is a complex strength (Re sigma >= 0, Im sigma >= 0), m >= 1 an
integer power, and delta the layer thickness.  The stretched layer depth is

    zeta = integral_b^{b+delta} rho(y) dy = delta * (1 + sigma/(m+1)),

so Re zeta = (1 + Re sigma/(m+1)) * delta and Im zeta = Im sigma/(m+1) * delta.
Re zeta >= 1 is required for the error analysis to apply.

Truncating the stretched problem at y = b + delta (homogeneous Dirichlet on
top) perturbs the exact transparent boundary operator by an amount controlled
by the fluctuation constant

    F = max_j max( Dj-/(exp(Dj- * Im zeta / 2) - 1),
                   Dj+/(exp(Dj+ * Re zeta / 2) - 1) ) * Cmax,
    Cmax = max( 12*kappa2, 16*kappa2^4, 8 + 2*kappa2^2,
                16*kappa2^3/kappa1^2, 24*(16 + kappa2^2)^2/kappa1^2 ),

where Dj-/Dj+ are the per-branch cut-off distances of the propagating /
evanescent Rayleigh modes.  The derived boundary-operator bound is

    F_hat = 17 * omega^2 * F / kappa1^4,

and F <= kappa1^2/2 guarantees coercivity-style control of the truncated
problem.  Calibration walks delta through a geometric grid until
F_hat * sqrt(period) meets a target while Re zeta >= 1.

Inside the layer the incident wave is no longer a solution of the stretched
Navier operator L; its image g = L u_inc (zero below y = b) is the volume
data of the PML formulation and is available here in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import cos, sin

import numpy as np

from .waves import ModeTable, WaveContext, incident_field

__all__ = [
    "PmlProfile",
    "ModelingConstants",
    "CalibrationError",
    "make_pml",
    "compute_zeta",
    "rho",
    "rho_prime",
    "modeling_constants",
    "calibrate",
    "pml_source",
]

#: expm1 overflow guard: exp(700) is near the float64 ceiling and the
#: corresponding fluctuation term is already < 1e-300.
_EXP_CLAMP = 700.0


class CalibrationError(RuntimeError):
    """No layer thickness on the calibration grid reaches the target."""


@dataclass(frozen=True)
class PmlProfile:
    """Layer description: strength sigma, power m, thickness delta, start b.

    ``zeta`` caches the stretched depth delta * (1 + sigma/(m+1)).
    """

    sigma: complex
    m: int
    delta: float
    b: float
    zeta: complex

    @property
    def top(self) -> float:
        """Physical height of the truncation line, b + delta."""
        return self.b + self.delta


@dataclass(frozen=True)
class ModelingConstants:
    """Fluctuation and boundary-operator constants of a PML configuration.

    Attributes
    ----------
    f : float
        Fluctuation constant F.
    f_hat : float
        Boundary-operator bound F_hat = 17 * omega^2 * F / kappa1^4.
    coercive : bool
        Whether F <= kappa1^2 / 2.
    terms : ndarray, shape (2, 2)
        The per-branch fluctuation ratios [[D1-, D1+], [D2-, D2+]] before
        multiplication by Cmax (diagnostic).
    cmax : float
        The wavenumber factor Cmax.
    """

    f: float
    f_hat: float
    coercive: bool
    terms: np.ndarray
    cmax: float


def compute_zeta(sigma: complex, m: int, delta: float) -> complex:
    """Stretched layer depth zeta = delta * (1 + sigma/(m+1))."""
    return delta * (1.0 + complex(sigma) / (m + 1))


def make_pml(sigma: complex, m: int, delta: float, b: float) -> PmlProfile:
    """Validate layer parameters and build a :class:`PmlProfile`.

    Raises
    ------
    ValueError
        For non-positive delta, m < 1, or sigma outside the closed right
        upper quadrant (Re >= 0, Im >= 0, sigma != 0).
    """
    sigma = complex(sigma)
    if not (delta > 0.0 and np.isfinite(delta)):
        raise ValueError(f"delta must be positive and finite, got {delta}")
    if int(m) != m or m < 1:
        raise ValueError(f"m must be an integer >= 1, got {m}")
    if sigma.real < 0.0 or sigma.imag < 0.0 or sigma == 0:
        raise ValueError(
            f"sigma must satisfy Re >= 0, Im >= 0, sigma != 0, got {sigma}"
        )
    if not np.isfinite(b):
        raise ValueError(f"b must be finite, got {b}")
    return PmlProfile(
        sigma=sigma,
        m=int(m),
        delta=float(delta),
        b=float(b),
        zeta=compute_zeta(sigma, m, delta),
    )


def rho(profile: PmlProfile, y: np.ndarray) -> np.ndarray:
    """Medium function rho(y); identically 1 at and below y = b."""
    y = np.asarray(y, dtype=float)
    t = np.clip((y - profile.b) / profile.delta, 0.0, None)
    return np.where(y > profile.b, 1.0 + profile.sigma * t**profile.m, 1.0 + 0.0j)


def rho_prime(profile: PmlProfile, y: np.ndarray) -> np.ndarray:
    """Derivative rho'(y); zero at and below y = b."""
    y = np.asarray(y, dtype=float)
    t = np.clip((y - profile.b) / profile.delta, 0.0, None)
    val = profile.sigma * profile.m * t ** (profile.m - 1) / profile.delta
    return np.where(y > profile.b, val, 0.0 + 0.0j)


def _fluct_ratio(delta_cut: float, depth: float) -> float:
    """Evaluate D / (exp(D * depth) - 1) safely (0 for empty D = +inf)."""
    if not np.isfinite(delta_cut):
        return 0.0
    arg = delta_cut * depth
    if arg <= 0.0:
        return float("inf")
    return float(delta_cut / np.expm1(min(arg, _EXP_CLAMP)))


def modeling_constants(
    ctx: WaveContext, modes: ModeTable, profile: PmlProfile
) -> ModelingConstants:
    """Fluctuation constant F, operator bound F_hat and the coercivity flag.

    Parameters
    ----------
    ctx : WaveContext
    modes : ModeTable
        Supplies the cut-off distances; its truncation window defines the
        evanescent minima.
    profile : PmlProfile

    Returns
    -------
    ModelingConstants
    """
    k1, k2 = ctx.kappa1, ctx.kappa2
    cmax = max(
        12.0 * k2,
        16.0 * k2**4,
        8.0 + 2.0 * k2**2,
        16.0 * k2**3 / k1**2,
        24.0 * (16.0 + k2**2) ** 2 / k1**2,
    )
    re_half = profile.zeta.real / 2.0
    im_half = profile.zeta.imag / 2.0
    terms = np.array(
        [
            [_fluct_ratio(modes.delta_minus[0], im_half), _fluct_ratio(modes.delta_plus[0], re_half)],
            [_fluct_ratio(modes.delta_minus[1], im_half), _fluct_ratio(modes.delta_plus[1], re_half)],
        ]
    )
    f = float(terms.max()) * cmax
    f_hat = 17.0 * ctx.omega**2 * f / k1**4
    return ModelingConstants(
        f=f,
        f_hat=f_hat,
        coercive=bool(f <= k1**2 / 2.0),
        terms=terms,
        cmax=cmax,
    )


def calibrate(
    ctx: WaveContext,
    modes: ModeTable,
    sigma: complex = 12.0 + 12.0j,
    m: int = 2,
    target: float = 1e-8,
    delta0: float = 0.25,
    delta_cap: float = 64.0,
) -> PmlProfile:
    """Pick the smallest layer thickness meeting the fluctuation target.

    Walks delta through the geometric grid delta0 * 2^k (k = 0, 1, ...) up to
    ``delta_cap`` and returns the first profile with Re zeta >= 1 and
    F_hat * sqrt(period) <= target.

    Parameters
    ----------
    ctx, modes
        Wave context and mode table (fixed across the grid).
    sigma, m
        Layer strength and power.
    target : float
        Bound demanded of F_hat * sqrt(period).
    delta0, delta_cap : float
        Grid start and inclusive cap.

    Returns
    -------
    PmlProfile

    Raises
    ------
    CalibrationError
        If no grid point satisfies both conditions; the message reports the
        best F_hat * sqrt(period) reached.
    """
    if target <= 0.0:
        raise ValueError(f"target must be positive, got {target}")
    if delta0 <= 0.0 or delta_cap < delta0:
        raise ValueError("need 0 < delta0 <= delta_cap")
    best = float("inf")
    best_delta = None
    delta = float(delta0)
    sqrt_period = float(np.sqrt(ctx.period))
    while delta <= delta_cap * (1.0 + 1e-12):
        profile = make_pml(sigma, m, delta, ctx.gamma_height)
        if profile.zeta.real >= 1.0:
            mc = modeling_constants(ctx, modes, profile)
            achieved = mc.f_hat * sqrt_period
            if achieved <= target:
                return profile
            if achieved < best:
                best, best_delta = achieved, delta
        delta *= 2.0
    raise CalibrationError(
        f"no delta in [{delta0}, {delta_cap}] reaches "
        f"F_hat*sqrt(period) <= {target:.3g}; best was {best:.3g} at "
        f"delta = {best_delta}"
    )


def pml_source(
    ctx: WaveContext,
    profile: PmlProfile,
    x: np.ndarray,
    y: np.ndarray,
    amplitude: float = 1.0,
) -> np.ndarray:
    """Volume data g = L u_inc of the stretched formulation, in closed form.

    For the plane wave u_inc = (u1, u2) * exp(i*(alpha*x - beta*y)) the
    stretched Navier operator reduces to (rho = rho(y), rho' = rho'(y)):

        g1 = [ -(lam+2mu)*alpha^2*rho - mu*beta^2/rho
               + i*mu*beta*rho'/rho^2 + omega^2*rho ] * u1
             + (lam+mu)*alpha*beta * u2,
        g2 = (lam+mu)*alpha*beta * u1
             + [ -mu*alpha^2*rho - (lam+2mu)*beta^2/rho
                 + i*(lam+2mu)*beta*rho'/rho^2 + omega^2*rho ] * u2.

    The result vanishes identically at and below y = b where rho = 1 and the
    plane wave solves the unstretched equation.

    Parameters
    ----------
    ctx, profile
        Wave context and layer profile.
    x, y : ndarray
        Coordinates (broadcast together).
    amplitude : float
        Incident amplitude; 0 gives exactly zero data.

    Returns
    -------
    ndarray of complex, shape broadcast(x, y).shape + (2,)
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lam, mu, om2 = ctx.lam, ctx.mu, ctx.omega**2
    al, be = ctx.alpha, ctx.beta
    r = rho(profile, y)
    rp = rho_prime(profile, y)
    u = incident_field(ctx, x, y, amplitude)

    diag1 = -(lam + 2 * mu) * al**2 * r - mu * be**2 / r + 1j * mu * be * rp / r**2 + om2 * r
    diag2 = -mu * al**2 * r - (lam + 2 * mu) * be**2 / r + 1j * (lam + 2 * mu) * be * rp / r**2 + om2 * r
    off = (lam + mu) * al * be

    g = np.empty(u.shape, dtype=complex)
    g[..., 0] = diag1 * u[..., 0] + off * u[..., 1]
    g[..., 1] = off * u[..., 0] + diag2 * u[..., 1]
    # Exactly zero outside the layer (the formulas already cancel there in
    # exact arithmetic; enforce bit-exact zero for the physical region).
    inside = (y > profile.b)
    g *= inside[..., None]
    return g
