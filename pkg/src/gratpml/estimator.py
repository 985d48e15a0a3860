"""Residual a posteriori error estimation for the layered P1 problem.

Each element T receives the indicator

    eta_T = h_T * ||R_T||_{L2(T)} + (1/2 * sum_e h_e * ||J_e||^2_{L2(e)})^{1/2}

where R_T is the strong residual (for P1 nothing but the zero-order and the
variable-coefficient first-order terms survive) and J_e the jump of the
discrete flux of the assembled bilinear form across the edges of T.  The
flux consistent with the assembled form is

    W1 = (lam+2mu)*rho*dx(u1)*nx + mu/rho*dy(u1)*ny + (lam+mu)*dy(u2)*nx
    W2 = mu*rho*dx(u2)*nx + (lam+2mu)/rho*dy(u2)*ny + (lam+mu)*dx(u1)*ny

(the default, ``weighted_jumps=True``), which reduces to the classical
traction-type flux where rho = 1.  The plain variant drops the rho weights
on interior edges and uses mu*dx(u) + (lam+mu)*e1*(dx(u1) + 1/rho*dy(u2))
across the quasi-periodic boundary.

Quasi-periodic boundary edges are jumped against their mirrored partner
with the phase exp(-i*alpha*period) on the right trace; Dirichlet edges
(surface and truncation line) carry no jump.  Elements touching the
truncation line additionally pay the boundary-data interpolation error,

    eta_hat_T = eta_T + ||I_h u_inc - u_inc||_{L2(top edge)} ,

and the two global quantities reported are

    eps_fem = ||u_h - u_inc||_{L2(top)} + sqrt(sum_T eta_hat_T^2),
    eps_pml = f_hat * ||u_h - u_inc||_{L2(interface)},

the discretization part driving the adaptive loop and the (exponentially
small) layer-truncation part, with f_hat the layer modeling constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .meshing import PHYSICAL, Mesh, _edge_partners
from .pml import PmlProfile, pml_source, rho, rho_prime
from .quadrature import edge_rule, triangle_rule
from .waves import WaveContext, incident_field

__all__ = ["ErrorIndicators", "indicators", "element_residuals", "jump_terms"]


@dataclass(frozen=True)
class ErrorIndicators:
    """Per-element indicators and the derived global error measures."""

    eta: np.ndarray
    eta_hat: np.ndarray
    residual_terms: np.ndarray
    jump_terms: np.ndarray
    top_terms: np.ndarray
    global_eta: float
    eps_fem: float
    eps_pml: float
    boundary_l2_top: float
    boundary_l2_interface: float


def _gradients(mesh: Mesh, field: np.ndarray) -> np.ndarray:
    """Constant per-element gradient J[m, c, d] = d_d u_c of a nodal field."""
    vals = field[mesh.tris]  # (M, 3, 2)
    return np.einsum("mic,mid->mcd", vals, mesh.grads())


def element_residuals(
    mesh: Mesh,
    field: np.ndarray,
    ctx: WaveContext,
    profile: PmlProfile,
    amplitude: float = 1.0,
    quad_degree: int = 5,
) -> np.ndarray:
    """||R_T||_{L2(T)} per element.

    Physical region: R_T = omega^2 * u_h, integrated exactly.  Layer:
    R_T,c = -coef_c * rho'/rho^2 * dy(u_c) + omega^2 * rho * u_c - g_c with
    coef = (mu, lam+2mu) and g the layer volume data, integrated with the
    given quadrature degree.
    """
    field = np.asarray(field)
    vals = field[mesh.tris]
    area = mesh.areas()
    om2 = ctx.omega**2

    # exact: int_T |u|^2 = A/12 * (sum |v_i|^2 + |sum v_i|^2) per component
    sq = (np.abs(vals) ** 2).sum(axis=(1, 2))
    sm = (np.abs(vals.sum(axis=1)) ** 2).sum(axis=1)
    norms = om2 * np.sqrt(area / 12.0 * (sq + sm))

    pml = mesh.region != PHYSICAL
    if pml.any():
        bary, w = triangle_rule(quad_degree)
        coords = mesh.nodes[mesh.tris[pml]]
        pts = np.einsum("qi,mid->mqd", bary, coords)
        x, y = pts[..., 0], pts[..., 1]
        r = rho(profile, y)
        rp = rho_prime(profile, y)
        g = pml_source(ctx, profile, x, y, amplitude)
        uq = np.einsum("qi,mic->mqc", bary, vals[pml])
        grad = _gradients(mesh, field)[pml]
        dy1 = grad[:, 0, 1][:, None]
        dy2 = grad[:, 1, 1][:, None]
        r1 = -ctx.mu * rp / r**2 * dy1 + om2 * r * uq[:, :, 0] - g[:, :, 0]
        r2 = (
            -(ctx.lam + 2.0 * ctx.mu) * rp / r**2 * dy2
            + om2 * r * uq[:, :, 1]
            - g[:, :, 1]
        )
        dens = np.abs(r1) ** 2 + np.abs(r2) ** 2
        norms[pml] = np.sqrt(area[pml] * (dens @ w).real)
    return norms


def _flux_parts(
    grad: np.ndarray, nx: np.ndarray, ny: np.ndarray, ctx: WaveContext, weighted: bool
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split the flux into rho-, constant- and 1/rho-weighted parts.

    Returns (P, C, Q), each (E, 2) complex, so the flux along an edge is
    P*rho(y) + C + Q/rho(y).
    """
    lam, mu = ctx.lam, ctx.mu
    j = grad
    p = np.empty(j.shape[:1] + (2,), dtype=complex)
    c = np.empty_like(p)
    q = np.empty_like(p)
    if weighted:
        p[:, 0] = (lam + 2 * mu) * j[:, 0, 0] * nx
        p[:, 1] = mu * j[:, 1, 0] * nx
        c[:, 0] = (lam + mu) * j[:, 1, 1] * nx
        c[:, 1] = (lam + mu) * j[:, 0, 0] * ny
        q[:, 0] = mu * j[:, 0, 1] * ny
        q[:, 1] = (lam + 2 * mu) * j[:, 1, 1] * ny
    else:
        div = j[:, 0, 0] + j[:, 1, 1]
        p[:] = 0.0
        c[:, 0] = mu * (j[:, 0, 0] * nx + j[:, 0, 1] * ny) + (lam + mu) * div * nx
        c[:, 1] = mu * (j[:, 1, 0] * nx + j[:, 1, 1] * ny) + (lam + mu) * div * ny
        q[:] = 0.0
    return p, c, q


def _periodic_flux_parts(
    grad: np.ndarray, ctx: WaveContext, weighted: bool
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flux parts across the vertical quasi-periodic boundary (normal e_x)."""
    if weighted:
        one = np.ones(grad.shape[0])
        return _flux_parts(grad, one, np.zeros_like(one), ctx, True)
    lam, mu = ctx.lam, ctx.mu
    j = grad
    p = np.zeros(j.shape[:1] + (2,), dtype=complex)
    c = np.zeros_like(p)
    q = np.zeros_like(p)
    c[:, 0] = mu * j[:, 0, 0] + (lam + mu) * j[:, 0, 0]
    c[:, 1] = mu * j[:, 1, 0]
    q[:, 0] = (lam + mu) * j[:, 1, 1]
    return p, c, q


def jump_terms(
    mesh: Mesh,
    field: np.ndarray,
    ctx: WaveContext,
    profile: PmlProfile,
    weighted: bool = True,
) -> np.ndarray:
    """sum_e h_e ||J_e||^2_{L2(e)} per element (Dirichlet edges excluded)."""
    field = np.asarray(field)
    grad = _gradients(mesh, field)
    edges, _, edge_tri = mesh.edge_structure()
    pa = mesh.nodes[edges[:, 0]]
    pb = mesh.nodes[edges[:, 1]]
    dvec = pb - pa
    h = np.linalg.norm(dvec, axis=1)
    tq, wq = edge_rule(5)
    out = np.zeros(mesh.n_tris)

    def accumulate(eids, dp, dc, dq, tris_a, tris_b):
        # integral over each edge of |dp*rho + dc + dq/rho|^2
        yq = pa[eids, 1][:, None] + dvec[eids, 1][:, None] * tq[None, :]
        r = rho(profile, yq)
        val = (
            dp[:, None, :] * r[:, :, None]
            + dc[:, None, :]
            + dq[:, None, :] / r[:, :, None]
        )
        dens = (np.abs(val) ** 2).sum(axis=2)
        q_e = h[eids] ** 2 * (dens @ wq).real
        np.add.at(out, tris_a, q_e)
        np.add.at(out, tris_b, q_e)

    interior = np.nonzero(edge_tri[:, 1] >= 0)[0]
    if interior.size:
        t1, t2 = edge_tri[interior, 0], edge_tri[interior, 1]
        nx = dvec[interior, 1] / h[interior]
        ny = -dvec[interior, 0] / h[interior]
        p1, c1, q1 = _flux_parts(grad[t1], nx, ny, ctx, weighted)
        p2, c2, q2 = _flux_parts(grad[t2], nx, ny, ctx, weighted)
        accumulate(interior, p1 - p2, c1 - c2, q1 - q2, t1, t2)

    partner = _edge_partners(mesh, edges)
    left = np.nonzero(
        (edge_tri[:, 1] < 0)
        & (partner >= 0)
        & mesh.on_left[edges[:, 0]]
        & mesh.on_left[edges[:, 1]]
    )[0]
    if left.size:
        mate = partner[left]
        tl, tr = edge_tri[left, 0], edge_tri[mate, 0]
        pl, cl, ql = _periodic_flux_parts(grad[tl], ctx, weighted)
        pr, cr, qr = _periodic_flux_parts(grad[tr], ctx, weighted)
        ph = np.exp(-1j * ctx.alpha * ctx.period)
        accumulate(left, pl - ph * pr, cl - ph * cr, ql - ph * qr, tl, tr)

    return out


def _edge_l2_sq_against_incident(
    mesh: Mesh,
    field: np.ndarray,
    ctx: WaveContext,
    eids: np.ndarray,
    edges: np.ndarray,
    amplitude: float,
) -> np.ndarray:
    """int_e |lerp(field) - u_inc|^2 for each given edge."""
    if eids.size == 0:
        return np.zeros(0)
    a, b = edges[eids, 0], edges[eids, 1]
    pa, pb = mesh.nodes[a], mesh.nodes[b]
    h = np.linalg.norm(pb - pa, axis=1)
    tq, wq = edge_rule(5)
    pts = pa[:, None, :] + (pb - pa)[:, None, :] * tq[None, :, None]
    uinc = incident_field(ctx, pts[..., 0], pts[..., 1], amplitude)
    lerp = (
        field[a][:, None, :] * (1.0 - tq)[None, :, None]
        + field[b][:, None, :] * tq[None, :, None]
    )
    dens = (np.abs(lerp - uinc) ** 2).sum(axis=2)
    return h * (dens @ wq).real


def indicators(
    mesh: Mesh,
    field: np.ndarray,
    ctx: WaveContext,
    profile: PmlProfile,
    f_hat: float,
    *,
    weighted_jumps: bool = True,
    amplitude: float = 1.0,
    quad_degree: int = 5,
) -> ErrorIndicators:
    """Compute all element indicators and global error measures.

    Parameters
    ----------
    mesh, field
        Mesh and nodal solution values, shape (n_nodes, 2).
    ctx, profile
        Wave context and layer profile.
    f_hat : float
        Layer modeling constant scaling the truncation error term.
    weighted_jumps : bool
        Use the form-consistent rho-weighted flux (default) or the plain
        traction flux in the edge jumps.
    amplitude : float
        Incident amplitude (0 turns all data terms off).
    quad_degree : int
        Quadrature degree of the layer residual integrals.
    """
    field = np.asarray(field)
    if field.shape != (mesh.n_nodes, 2):
        raise ValueError("field must be nodal values of shape (n_nodes, 2)")
    res = element_residuals(mesh, field, ctx, profile, amplitude, quad_degree)
    jumps = jump_terms(mesh, field, ctx, profile, weighted_jumps)
    eta = mesh.diameters() * res + np.sqrt(0.5 * jumps)

    edges, _, edge_tri = mesh.edge_structure()
    top_edges = np.nonzero(
        mesh.on_top[edges[:, 0]] & mesh.on_top[edges[:, 1]]
    )[0]
    top_sq = _edge_l2_sq_against_incident(
        mesh, field, ctx, top_edges, edges, amplitude
    )
    top_terms = np.zeros(mesh.n_tris)
    if top_edges.size:
        np.add.at(top_terms, edge_tri[top_edges, 0], top_sq)
    top_terms = np.sqrt(top_terms)
    eta_hat = eta + top_terms

    gamma_edges = np.nonzero(
        mesh.on_gamma[edges[:, 0]] & mesh.on_gamma[edges[:, 1]]
    )[0]
    gamma_sq = _edge_l2_sq_against_incident(
        mesh, field, ctx, gamma_edges, edges, amplitude
    )
    l2_top = float(np.sqrt(top_sq.sum()))
    l2_gamma = float(np.sqrt(gamma_sq.sum()))
    global_eta = float(np.sqrt((eta_hat**2).sum()))
    return ErrorIndicators(
        eta=eta,
        eta_hat=eta_hat,
        residual_terms=res,
        jump_terms=jumps,
        top_terms=top_terms,
        global_eta=global_eta,
        eps_fem=l2_top + global_eta,
        eps_pml=f_hat * l2_gamma,
        boundary_l2_top=l2_top,
        boundary_l2_interface=l2_gamma,
    )
