"""Modal (Rayleigh) analysis on the interface line y = b.

Everything spectral lives here: Fourier coefficients of the scattered trace
along the interface, recovery of the compressional and shear wave potentials
from those coefficients, grating efficiencies and the energy balance, the
exact transparent-boundary operator of the half space above the interface,
and its counterpart for a finite stretched layer of depth zeta terminated by
a Dirichlet condition.  The operator route and an explicit 4x4 layer solve
are kept as two independent formulations so they can be cross-checked.

Per mode n the tangential/vertical wavenumbers are alpha_n, beta1_n
(compressional) and beta2_n (shear), and chi_n = alpha_n^2 + beta1_n*beta2_n
never vanishes (kappa1^2 < |chi_n| < kappa2^2).  A scattered trace
v = (v1, v2) on the interface determines the outgoing potentials via

    phi1 = -(i/chi) * (alpha_n*v1 + beta2*v2),
    phi2 = -(i/chi) * (beta1*v1  - alpha_n*v2).

For the layer operator the hyperbolic ratios

    eps_j = coth(-i*beta_j*zeta) - 1,
    delta_j = (e^{i*beta2*zeta} - e^{i*beta1*zeta})
              / (e^{-i*beta_j*zeta} - e^{i*beta_j*zeta})

decay exponentially in the stretched depth; they are evaluated through
t_j = -i*beta_j*zeta (always Re t_j > 0 for admissible profiles) in forms
that neither overflow nor cancel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .meshing import Mesh
from .pml import PmlProfile
from .waves import ModeTable, WaveContext

__all__ = [
    "TraceError",
    "ParameterRegimeError",
    "FourierTrace",
    "Potentials",
    "EfficiencyReport",
    "fourier_trace",
    "recover_potentials",
    "efficiencies",
    "dtn_matrix",
    "layer_dtn_matrix",
    "ab_coefficients",
    "layer_system",
    "spectral_norm_2x2",
]


class TraceError(RuntimeError):
    """The interface line is not fully covered by mesh edges."""


class ParameterRegimeError(RuntimeError):
    """A guarded denominator left its safe regime (layer too shallow)."""


# --------------------------------------------------------------------------
# Fourier trace of the scattered field on the interface
# --------------------------------------------------------------------------


def _segment_integrals(t: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """E1 = int_0^h e^{-i t s} ds and E2 = int_0^h s e^{-i t s} ds.

    Vectorized over broadcast (t, h); switches to series for |t*h| < 1e-6
    where the closed forms cancel.
    """
    t = np.asarray(t, dtype=float)
    h = np.asarray(h, dtype=float)
    th = t * h
    small = np.abs(th) < 1e-6
    ts = np.where(small, 1.0, t)
    phase = np.exp(-1j * ts * h)
    e1 = (1.0 - phase) / (1j * ts)
    e2 = phase * (1j * h / ts + 1.0 / ts**2) - 1.0 / ts**2
    if np.any(small):
        z = -1j * th
        # E1 = h (1 + z/2 + z^2/6 + z^3/24), E2 = h^2 (1/2 + z/3 + z^2/8)
        s1 = h * (1.0 + z / 2.0 + z**2 / 6.0 + z**3 / 24.0)
        s2 = h**2 * (0.5 + z / 3.0 + z**2 / 8.0)
        e1 = np.where(small, s1, e1)
        e2 = np.where(small, s2, e2)
    return e1, e2


@dataclass(frozen=True)
class FourierTrace:
    """Fourier coefficients of the scattered trace on the interface.

    ``coeffs[k]`` is the 2-vector coefficient of exp(i*alpha_n*x) for
    n = k - n_max, i.e. the window n = -n_max..n_max in order.
    """

    n_max: int
    n: np.ndarray
    coeffs: np.ndarray

    def coefficient(self, n: int) -> np.ndarray:
        if abs(n) > self.n_max:
            raise IndexError(f"mode {n} outside window +-{self.n_max}")
        return self.coeffs[n + self.n_max]


def fourier_trace(
    mesh: Mesh,
    field: np.ndarray,
    ctx: WaveContext,
    n_max: int,
    amplitude: float = 1.0,
) -> FourierTrace:
    """Fourier-analyze (field - u_inc) along the interface line y = b.

    The piecewise-linear nodal field is integrated edge by edge in closed
    form against exp(-i*alpha_n*x); the incident part is subtracted
    analytically, so no interpolation error enters the incident term.

    Raises TraceError if the interface edges do not exactly tile one period.
    """
    field = np.asarray(field)
    if field.shape != (mesh.n_nodes, 2):
        raise ValueError("field must be nodal values of shape (n_nodes, 2)")
    edges, _, _ = mesh.edge_structure()
    on_gamma = mesh.on_gamma
    gamma = np.nonzero(on_gamma[edges[:, 0]] & on_gamma[edges[:, 1]])[0]
    if gamma.size == 0:
        raise TraceError("no mesh edges on the interface line")

    xa = mesh.nodes[edges[gamma, 0], 0]
    xb = mesh.nodes[edges[gamma, 1], 0]
    flip = xb < xa
    n0 = np.where(flip, edges[gamma, 1], edges[gamma, 0])
    n1 = np.where(flip, edges[gamma, 0], edges[gamma, 1])
    x0 = mesh.nodes[n0, 0]
    h = mesh.nodes[n1, 0] - x0
    if np.any(h <= 0.0):
        raise TraceError("degenerate interface edge")
    span = float(np.sum(h))
    if abs(span - ctx.period) > 1e-9 * ctx.period:
        raise TraceError(
            f"interface edges cover {span!r}, expected one period {ctx.period!r}"
        )

    w0 = field[n0]  # (E, 2)
    w1 = field[n1]
    ns = np.arange(-n_max, n_max + 1)
    alpha_n = ctx.alpha + 2.0 * np.pi * ns / ctx.period

    # field part: int edge (w0 + (w1-w0) s/h) e^{-i alpha_n (x0+s)} ds
    te = alpha_n[:, None] * np.ones_like(x0)[None, :]
    e1, e2 = _segment_integrals(te, h[None, :])
    head = np.exp(-1j * alpha_n[:, None] * x0[None, :])
    lin = (w1 - w0) / h[:, None]
    coeffs = np.einsum(
        "ke,ed->kd", head * e1, w0
    ) + np.einsum("ke,ed->kd", head * e2, lin)

    # incident part, integrated analytically: u_inc(x, b) =
    # amplitude * (sin th, -cos th) e^{-i beta b} e^{i alpha x}
    pol = amplitude * np.array([np.sin(ctx.theta), -np.cos(ctx.theta)]) * np.exp(
        -1j * ctx.beta * ctx.gamma_height
    )
    t_inc = (2.0 * np.pi * ns / ctx.period)[:, None] * np.ones_like(x0)[None, :]
    f1, _ = _segment_integrals(t_inc, h[None, :])
    head_inc = np.exp(-1j * (2.0 * np.pi * ns / ctx.period)[:, None] * x0[None, :])
    inc = (head_inc * f1).sum(axis=1)[:, None] * pol[None, :]

    coeffs = (coeffs - inc) / ctx.period
    return FourierTrace(n_max=int(n_max), n=ns, coeffs=coeffs)


# --------------------------------------------------------------------------
# Potentials and efficiencies
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Potentials:
    """Outgoing compressional/shear potential amplitudes on the interface."""

    n_max: int
    n: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray


def recover_potentials(modes: ModeTable, trace: FourierTrace) -> Potentials:
    """Invert the 2x2 modal trace map for the outgoing potentials."""
    if modes.n_max != trace.n_max:
        raise ValueError("mode table and trace use different windows")
    v1 = trace.coeffs[:, 0]
    v2 = trace.coeffs[:, 1]
    phi1 = -1j / modes.chi * (modes.alpha_n * v1 + modes.beta2 * v2)
    phi2 = -1j / modes.chi * (modes.beta1 * v1 - modes.alpha_n * v2)
    return Potentials(n_max=modes.n_max, n=modes.n.copy(), phi1=phi1, phi2=phi2)


@dataclass(frozen=True)
class EfficiencyReport:
    """Grating efficiencies of the propagating reflected modes.

    e1/e2 hold the compressional/shear efficiencies over the full window
    (NaN for evanescent modes); ``total`` should equal 1 for a lossless
    grating with exact data.
    """

    n: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    total: float

    def propagating(self) -> dict[str, dict[int, float]]:
        """Efficiencies keyed by mode order, propagating modes only."""
        out: dict[str, dict[int, float]] = {"compressional": {}, "shear": {}}
        for kind, arr in (("compressional", self.e1), ("shear", self.e2)):
            for n, e in zip(self.n, arr):
                if np.isfinite(e):
                    out[kind][int(n)] = float(e)
        return out


def efficiencies(
    modes: ModeTable, potentials: Potentials, amplitude: float = 1.0
) -> EfficiencyReport:
    """Energy efficiencies e_j^n = beta_j^n |r_j^n|^2 / (beta |r0|^2).

    r0 = -i*amplitude/kappa1 is the incident potential amplitude and
    r_j^n = phi_j^n e^{-i beta_j^n b} the outgoing ones referred to y = 0.
    """
    if amplitude == 0.0:
        raise ValueError("efficiencies are undefined for zero amplitude")
    if modes.n_max != potentials.n_max:
        raise ValueError("mode table and potentials use different windows")
    ctx = modes.ctx
    b = ctx.gamma_height
    r0sq = abs(amplitude / ctx.kappa1) ** 2
    r1 = potentials.phi1 * np.exp(-1j * modes.beta1 * b)
    r2 = potentials.phi2 * np.exp(-1j * modes.beta2 * b)
    denom = ctx.beta * r0sq
    e1 = np.where(
        modes.prop1, modes.beta1.real * np.abs(r1) ** 2 / denom, np.nan
    )
    e2 = np.where(
        modes.prop2, modes.beta2.real * np.abs(r2) ** 2 / denom, np.nan
    )
    total = float(np.nansum(e1) + np.nansum(e2))
    return EfficiencyReport(
        n=modes.n.copy(), e1=e1, e2=e2, r1=r1, r2=r2, total=total
    )


# --------------------------------------------------------------------------
# Transparent-boundary operators
# --------------------------------------------------------------------------


def dtn_matrix(modes: ModeTable, n: int) -> np.ndarray:
    """Exact half-space boundary operator of mode n (trace -> traction)."""
    k = modes.index(n)
    ctx = modes.ctx
    a, b1, b2, chi = modes.alpha_n[k], modes.beta1[k], modes.beta2[k], modes.chi[k]
    om2, mu = ctx.omega**2, ctx.mu
    return (1j / chi) * np.array(
        [
            [om2 * b1, mu * a * chi - om2 * a],
            [om2 * a - mu * a * chi, om2 * b2],
        ]
    )


def _cexpm1(z: np.ndarray) -> np.ndarray:
    """expm1 for complex arguments, accurate near zero."""
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    return np.expm1(x) * np.cos(y) - 2.0 * np.sin(y / 2.0) ** 2 + 1j * np.exp(
        x
    ) * np.sin(y)

#: Re(2 t) beyond which coth(t) - 1 is exactly 0 in double precision.
_SATURATE = 700.0


def _layer_ratios(
    modes: ModeTable, profile: PmlProfile, k: int
) -> tuple[complex, complex, complex, complex, complex]:
    """Stable (eps1, delta1, delta2, eps1*eta, chi_hat) of one mode.

    All quantities are evaluated through t_j = -i*beta_j*zeta with
    Re t_j > 0, so nothing overflows however deep the layer is; the ratios
    saturate to their half-space limit 0 once e^{-2 Re t} underflows.
    """
    zeta = profile.zeta
    t1 = -1j * modes.beta1[k] * zeta
    t2 = -1j * modes.beta2[k] * zeta
    if min(t1.real, t2.real) <= 0.0:
        raise ParameterRegimeError(
            "layer profile does not damp both wave types (Re(-i*beta*zeta) <= 0)"
        )

    if 2.0 * t1.real > _SATURATE:
        eps1 = 0.0 + 0.0j  # coth has reached 1 in double precision
    else:
        eps1 = 2.0 / complex(_cexpm1(2.0 * t1))
    den1 = -_cexpm1(-2.0 * t1)
    den2 = -_cexpm1(-2.0 * t2)
    num = np.exp(-(t1 + t2))
    delta1 = (num - np.exp(-2.0 * t1)) / den1
    delta2 = (np.exp(-2.0 * t2) - num) / den2
    eps1_eta = 2.0 * num / den2

    a, b1, b2, chi = modes.alpha_n[k], modes.beta1[k], modes.beta2[k], modes.chi[k]
    chi_hat = chi + 4.0 * (delta2 - delta1 - delta1 * delta2) * a**2 * b1 * b2 / chi
    kap1 = modes.ctx.kappa1
    if abs(chi_hat) < 0.5 * kap1**2:
        raise ParameterRegimeError(
            f"layer-modified symbol chi_hat = {chi_hat:.6g} of mode "
            f"{modes.n[k]} is too close to zero (layer too shallow)"
        )
    return eps1, delta1, delta2, eps1_eta, chi_hat


def layer_dtn_matrix(modes: ModeTable, profile: PmlProfile, n: int) -> np.ndarray:
    """Boundary operator of the Dirichlet-terminated stretched layer.

    Converges exponentially (in the stretched depth zeta) to the half-space
    operator ``dtn_matrix``; their spectral distance is what the layer
    modeling constants bound.
    """
    k = modes.index(n)
    eps1, delta1, delta2, eps1_eta, chi_hat = _layer_ratios(modes, profile, k)
    ctx = modes.ctx
    a, b1, b2, chi = modes.alpha_n[k], modes.beta1[k], modes.beta2[k], modes.chi[k]
    om2, mu = ctx.omega**2, ctx.mu
    b1b2 = b1 * b2
    m11 = 1j * om2 * b1 / chi_hat + (1j * om2 * b1 / (chi * chi_hat)) * (
        eps1 * a**2 + (eps1_eta + 2.0 * delta2) * b1b2
    )
    m12 = (
        1j * mu * a
        - 1j * om2 * a / chi_hat
        - (1j * om2 * a * b1b2 / (chi * chi_hat))
        * (eps1 * (1.0 + 2.0 * delta2) - eps1_eta + 2.0 * delta2)
    )
    m21 = (
        -1j * mu * a
        + 1j * om2 * a / chi_hat
        - (1j * om2 * a * b1b2 / (chi * chi_hat))
        * (
            eps1 * (1.0 + 2.0 * delta2)
            - eps1_eta
            + 2.0 * (2.0 * delta1 * (1.0 + delta2) - delta2)
        )
    )
    m22 = 1j * om2 * b2 / chi_hat + (1j * om2 * b2 / (chi * chi_hat)) * (
        eps1 * b1b2 + (eps1_eta + 2.0 * delta2) * a**2
    )
    return np.array([[m11, m12], [m21, m22]])


def ab_coefficients(
    modes: ModeTable, profile: PmlProfile, n: int, v_hat: np.ndarray
) -> np.ndarray:
    """Closed-form layer amplitudes (A1, B1, A2, B2) for boundary trace v_hat.

    These are the up/down compressional and shear amplitudes of the layer
    field with Dirichlet trace v_hat at the interface and zero at the
    stretched depth zeta; ``layer_system`` solves the same 4x4 problem
    directly and must agree.  Products involving the growing ratio
    eta = delta2/delta1 are expanded via delta1*eta = delta2 so every factor
    stays bounded.
    """
    v_hat = np.asarray(v_hat, dtype=complex)
    if v_hat.shape != (2,):
        raise ValueError("v_hat must be a 2-vector")
    k = modes.index(n)
    eps1, delta1, delta2, eps1_eta, chi_hat = _layer_ratios(modes, profile, k)
    a, b1, b2, chi = modes.alpha_n[k], modes.beta1[k], modes.beta2[k], modes.chi[k]
    v1, v2 = v_hat
    pre = 1j / (2.0 * chi * chi_hat)

    # (eps1 + 2 delta1)(1 + delta2 - eta) = (eps1 + 2 delta1)(1 + delta2)
    #                                       - eps1 eta - 2 delta2
    f_a1 = (eps1 + 2.0 * delta1) * (1.0 + delta2) - eps1_eta - 2.0 * delta2
    a1 = pre * (
        -chi * (eps1 + 2.0) * (a * v1 + b2 * v2)
        + 2.0 * b2 * f_a1 * (a * b1 * v1 + a**2 * v2)
    )
    b1c = pre * (
        chi * eps1 * (a * v1 - b2 * v2)
        + 2.0
        * (eps1 * delta2 + 2.0 * (delta1 + delta1 * delta2))
        * (a * b1 * b2 * v1 - a**2 * b2 * v2)
    )
    # eps1*(1 + delta2 - eta) = eps1 (1 + delta2) - eps1 eta
    f_a2 = eps1 * (1.0 + delta2) - eps1_eta
    a2 = pre * (
        chi * (eps1_eta - 2.0 * (eps1 + 1.0) * (1.0 + delta2)) * (b1 * v1 - a * v2)
        + 2.0 * f_a2 * (b1**2 * b2 * v1 - a**3 * v2)
    )
    b2c = pre * (
        chi * (2.0 * delta2 * (eps1 + 1.0) - eps1_eta) * (b1 * v1 + a * v2)
        - 2.0 * delta2 * (eps1 + 2.0) * (b1**2 * b2 * v1 + a**3 * v2)
    )
    return np.array([a1, b1c, a2, b2c])


def layer_system(
    modes: ModeTable, profile: PmlProfile, n: int, v_hat: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """The explicit 4x4 layer problem (matrix, rhs) for (A1, B1, A2, B2).

    Rows: the two components of the Dirichlet trace at the interface and of
    the zero condition at the stretched depth zeta.  Direct evaluation of
    the exponentials e^{+-i beta zeta} limits this to moderate depths; it is
    a diagnostic used to validate ``ab_coefficients``, not production code.
    """
    v_hat = np.asarray(v_hat, dtype=complex)
    k = modes.index(n)
    a, b1, b2 = modes.alpha_n[k], modes.beta1[k], modes.beta2[k]
    zeta = profile.zeta
    e1p, e1m = np.exp(1j * b1 * zeta), np.exp(-1j * b1 * zeta)
    e2p, e2m = np.exp(1j * b2 * zeta), np.exp(-1j * b2 * zeta)
    mat = np.array(
        [
            [a, a, b2, -b2],
            [b1, -b1, -a, -a],
            [a * e1p, a * e1m, b2 * e2p, -b2 * e2m],
            [b1 * e1p, -b1 * e1m, -a * e2p, -a * e2m],
        ]
    )
    rhs = np.array([-1j * v_hat[0], -1j * v_hat[1], 0.0, 0.0])
    return mat, rhs


def spectral_norm_2x2(m: np.ndarray) -> float:
    """Exact spectral norm of a 2x2 complex matrix.

    sigma_max^2 = (s + sqrt(s^2 - 4 d)) / 2 with s the squared Frobenius
    norm and d = |det|^2; exact and cheaper than an SVD in the inner loops.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    s = float(np.sum(np.abs(m) ** 2))
    d = float(abs(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]) ** 2)
    disc = max(s * s - 4.0 * d, 0.0)
    return float(np.sqrt(0.5 * (s + np.sqrt(disc))))
