"""Incident-wave context and Rayleigh mode tables for periodic gratings.

A time-harmonic compressional plane wave

    u_inc(x, y) = (sin(theta), -cos(theta)) * exp(i*(alpha*x - beta*y))

travels downward onto a grating surface that is periodic in x with period
``period``.  The displacement field solves the Navier system

    mu * Lap(u) + (lam + mu) * grad(div(u)) + omega^2 * u = 0

above the surface, with u = 0 on the surface itself.  The two bulk
wavenumbers are

    kappa1 = omega / sqrt(lam + 2*mu)    (compressional),
    kappa2 = omega / sqrt(mu)            (shear),

and mu > 0, lam + mu > 0 imply kappa1 < kappa2.  The incident wave vector is
(alpha, -beta) with alpha = kappa1*sin(theta), beta = kappa1*cos(theta).

Quasi-periodicity splits any field into Rayleigh modes exp(i*alpha_n*x) with

    alpha_n    = alpha + 2*pi*n/period,
    beta_j^(n) = sqrt(kappa_j^2 - alpha_n^2)      if |alpha_n| < kappa_j,
               = i*sqrt(alpha_n^2 - kappa_j^2)    otherwise,

so each mode either propagates (real beta) or decays exponentially in y
(positive imaginary beta).  The mode coupling scalar

    chi^(n) = alpha_n^2 + beta_1^(n) * beta_2^(n)

satisfies kappa1^2 < |chi^(n)| < kappa2^2 for every n, which keeps the
transparent-boundary algebra well conditioned.  Cut-off modes
(|alpha_n| = kappa_j, beta = 0) make the boundary operators singular; mode
tables refuse to build within a relative tolerance of such a resonance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import cos, pi, sin, sqrt

import numpy as np

__all__ = [
    "WaveContext",
    "ModeTable",
    "ResonanceError",
    "derive_context",
    "build_mode_table",
    "incident_field",
    "incident_gradient",
]


class ResonanceError(ValueError):
    """A Rayleigh mode sits (numerically) at a cut-off |alpha_n| = kappa_j."""


@dataclass(frozen=True)
class WaveContext:
    """Physical parameters of one scattering problem plus derived constants.

    Attributes
    ----------
    omega : float
        Angular frequency, > 0.
    lam, mu : float
        Lamé constants with mu > 0 and lam + mu > 0.
    theta : float
        Incidence angle in radians, |theta| < pi/2 (measured from the
        downward vertical; theta = 0 is normal incidence).
    period : float
        Grating period in x, > 0.
    gamma_height : float
        Height y = b of the horizontal line Gamma where the transparent
        boundary / PML starts; must lie strictly above the grating.
    kappa1, kappa2 : float
        Compressional and shear wavenumbers.
    alpha, beta : float
        Horizontal and vertical components of the incident wave vector.
    """

    omega: float
    lam: float
    mu: float
    theta: float
    period: float
    gamma_height: float
    kappa1: float = field(init=False, default=0.0)
    kappa2: float = field(init=False, default=0.0)
    alpha: float = field(init=False, default=0.0)
    beta: float = field(init=False, default=0.0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kappa1", self.omega / sqrt(self.lam + 2.0 * self.mu))
        object.__setattr__(self, "kappa2", self.omega / sqrt(self.mu))
        object.__setattr__(self, "alpha", self.kappa1 * sin(self.theta))
        object.__setattr__(self, "beta", self.kappa1 * cos(self.theta))

    @property
    def phase(self) -> complex:
        """Quasi-periodicity factor exp(i*alpha*period)."""
        return complex(np.exp(1j * self.alpha * self.period))


def derive_context(
    omega: float,
    lam: float,
    mu: float,
    theta: float,
    period: float,
    gamma_height: float,
) -> WaveContext:
    """Validate physical parameters and derive the wave constants.

    Parameters
    ----------
    omega : float
        Angular frequency, must be > 0.
    lam, mu : float
        Lamé constants; mu > 0 and lam + mu > 0 are required (they make the
        elasticity tensor positive and imply kappa1 < kappa2).
    theta : float
        Incidence angle in radians, |theta| < pi/2.
    period : float
        Grating period, > 0.
    gamma_height : float
        Height of the transparent boundary line, > 0.

    Returns
    -------
    WaveContext

    Raises
    ------
    ValueError
        If any parameter lies outside its admissible range.
    """
    vals = [omega, lam, mu, theta, period, gamma_height]
    if not all(np.isfinite(v) for v in vals):
        raise ValueError("all wave parameters must be finite numbers")
    if omega <= 0.0:
        raise ValueError(f"omega must be positive, got {omega}")
    if mu <= 0.0:
        raise ValueError(f"mu must be positive, got {mu}")
    if lam + mu <= 0.0:
        raise ValueError(f"lam + mu must be positive, got {lam + mu}")
    if not abs(theta) < pi / 2.0:
        raise ValueError(f"|theta| must be < pi/2, got {theta}")
    if period <= 0.0:
        raise ValueError(f"period must be positive, got {period}")
    if gamma_height <= 0.0:
        raise ValueError(f"gamma_height must be positive, got {gamma_height}")
    return WaveContext(
        omega=float(omega),
        lam=float(lam),
        mu=float(mu),
        theta=float(theta),
        period=float(period),
        gamma_height=float(gamma_height),
    )


@dataclass(frozen=True)
class ModeTable:
    """Rayleigh-mode data for n = -n_max .. n_max.

    Attributes
    ----------
    ctx : WaveContext
        The context the table was built from.
    n_max : int
        Truncation order; arrays hold 2*n_max + 1 entries.
    n : ndarray of int
        Mode indices in ascending order.
    alpha_n : ndarray of float
        Horizontal wavenumbers alpha + 2*pi*n/period.
    beta1, beta2 : ndarray of complex
        Vertical wavenumbers for the compressional / shear branch (real
        positive when propagating, positive imaginary when evanescent).
    chi : ndarray of complex
        Coupling scalars alpha_n^2 + beta1*beta2.
    prop1, prop2 : ndarray of bool
        Masks of the propagating sets U_1, U_2 (|alpha_n| < kappa_j).
    delta1, delta2 : ndarray of float
        Cut-off distances |kappa_j^2 - alpha_n^2|^(1/2).
    delta_minus, delta_plus : tuple of float
        Per-branch minima of the cut-off distance over the propagating set
        (delta_minus) and over the evanescent remainder of the table
        (delta_plus, +inf when that set is empty).
    """

    ctx: WaveContext
    n_max: int
    n: np.ndarray
    alpha_n: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    chi: np.ndarray
    prop1: np.ndarray
    prop2: np.ndarray
    delta1: np.ndarray
    delta2: np.ndarray
    delta_minus: tuple
    delta_plus: tuple

    def index(self, n: int) -> int:
        """Array index of mode n."""
        if abs(n) > self.n_max:
            raise IndexError(f"mode {n} outside truncation |n| <= {self.n_max}")
        return n + self.n_max

    @property
    def propagating1(self) -> list:
        """Sorted list of propagating compressional mode indices (U_1)."""
        return [int(k) for k in self.n[self.prop1]]

    @property
    def propagating2(self) -> list:
        """Sorted list of propagating shear mode indices (U_2)."""
        return [int(k) for k in self.n[self.prop2]]


def _vertical_wavenumber(kappa: float, alpha_n: np.ndarray) -> np.ndarray:
    """beta = sqrt(kappa^2 - alpha_n^2) on the branch with Im >= 0.

    The evanescent branch is taken explicitly as i*sqrt(alpha_n^2 - kappa^2)
    so the result is exactly real or exactly imaginary.
    """
    diff = kappa * kappa - alpha_n * alpha_n
    out = np.where(
        diff > 0.0,
        np.sqrt(np.maximum(diff, 0.0)) + 0.0j,
        1j * np.sqrt(np.maximum(-diff, 0.0)),
    )
    return out


def build_mode_table(
    ctx: WaveContext, n_max: int = 20, resonance_tol: float = 1e-8
) -> ModeTable:
    """Tabulate Rayleigh modes for |n| <= n_max.

    Parameters
    ----------
    ctx : WaveContext
    n_max : int
        Truncation order, >= 0.
    resonance_tol : float
        Relative cut-off guard: the table refuses to build when some mode
        satisfies | |alpha_n| - kappa_j | <= resonance_tol * kappa_j.

    Returns
    -------
    ModeTable

    Raises
    ------
    ResonanceError
        When a mode sits within the resonance tolerance of a cut-off.
    """
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    n = np.arange(-n_max, n_max + 1)
    alpha_n = ctx.alpha + 2.0 * pi * n / ctx.period

    for kappa, j in ((ctx.kappa1, 1), (ctx.kappa2, 2)):
        near = np.abs(np.abs(alpha_n) - kappa) <= resonance_tol * kappa
        if near.any():
            bad = int(n[near][0])
            raise ResonanceError(
                f"mode n={bad} sits at the branch-{j} cut-off "
                f"(|alpha_n| = {abs(alpha_n[near][0]):.17g} vs "
                f"kappa{j} = {kappa:.17g}); perturb omega or theta"
            )

    beta1 = _vertical_wavenumber(ctx.kappa1, alpha_n)
    beta2 = _vertical_wavenumber(ctx.kappa2, alpha_n)
    chi = alpha_n.astype(complex) ** 2 + beta1 * beta2
    prop1 = np.abs(alpha_n) < ctx.kappa1
    prop2 = np.abs(alpha_n) < ctx.kappa2

    delta1 = np.sqrt(np.abs(ctx.kappa1**2 - alpha_n**2))
    delta2 = np.sqrt(np.abs(ctx.kappa2**2 - alpha_n**2))
    d_minus = []
    d_plus = []
    for delta_j, prop_j in ((delta1, prop1), (delta2, prop2)):
        d_minus.append(float(delta_j[prop_j].min()))
        evan = ~prop_j
        d_plus.append(float(delta_j[evan].min()) if evan.any() else float("inf"))

    return ModeTable(
        ctx=ctx,
        n_max=int(n_max),
        n=n,
        alpha_n=alpha_n,
        beta1=beta1,
        beta2=beta2,
        chi=chi,
        prop1=prop1,
        prop2=prop2,
        delta1=delta1,
        delta2=delta2,
        delta_minus=(d_minus[0], d_minus[1]),
        delta_plus=(d_plus[0], d_plus[1]),
    )


def incident_field(
    ctx: WaveContext, x: np.ndarray, y: np.ndarray, amplitude: float = 1.0
) -> np.ndarray:
    """Evaluate the incident compressional plane wave.

    Parameters
    ----------
    ctx : WaveContext
    x, y : ndarray
        Coordinates (broadcast together).
    amplitude : float
        Scalar multiplier; 0 yields the zero-data problem.

    Returns
    -------
    ndarray of complex, shape broadcast(x, y).shape + (2,)
        Displacement components (u1, u2).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    phase = np.exp(1j * (ctx.alpha * x - ctx.beta * y)) * amplitude
    pol = np.array([sin(ctx.theta), -cos(ctx.theta)])
    return phase[..., None] * pol


def incident_gradient(
    ctx: WaveContext, x: np.ndarray, y: np.ndarray, amplitude: float = 1.0
) -> np.ndarray:
    """Gradient of the incident wave: out[..., c, d] = d u_c / d x_d."""
    u = incident_field(ctx, x, y, amplitude)
    wavevec = np.array([1j * ctx.alpha, -1j * ctx.beta])
    return u[..., :, None] * wavevec
