"""P1 finite-element assembly of the stretched (PML) Navier problem.

The sesquilinear form on one period D (physical region plus layer) is

    b(u, v) = integral_D  (lam+2mu) * (rho*dx(u1)*dx(conj v1)
                                       + 1/rho*dy(u2)*dy(conj v2))
                        + mu * (1/rho*dy(u1)*dy(conj v1)
                                + rho*dx(u2)*dx(conj v2))
                        + (lam+mu) * (mixed term)
                        - omega^2 * rho * u . conj(v),

with the medium function rho = rho(y) of the layer (1 below y = b).  The
mixed term is assembled in the transpose-equivalent grouping

    (lam+mu) * (dy(u2)*dx(conj v1) + dx(u1)*dy(conj v2)),

which differs from the grouping (lam+mu)*(dx(u2)*dy(conj v1) +
dx(u1)*dy(conj v2)) by a constant-coefficient null Lagrangian: the two
assembled systems coincide (the difference integrates by parts onto boundary
terms that cancel under the quasi-periodic and Dirichlet constraints), while
the grouping used here makes every element matrix complex symmetric.  Pass
``literal_mixed=True`` to assemble the other grouping verbatim.

Boundary conditions: u = 0 on the grating surface, u = u_inc (nodal values)
on the truncation line, and quasi-periodicity u(period, y) =
exp(i*alpha*period) * u(0, y) imposed by slaving each right node to its
mirrored left node.  Constrained test functions carry the conjugate phase,
so the reduced matrix stays complex symmetric.  Eliminated Dirichlet columns
are folded into the right-hand side together with the volume data
g = L u_inc of the layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp

from .meshing import Mesh, PHYSICAL
from .pml import PmlProfile, pml_source, rho
from .quadrature import triangle_rule
from .waves import WaveContext, incident_field

__all__ = ["DofMap", "SparseSystem", "build_dofmap", "element_matrix", "assemble"]

FREE = 0
DIRICHLET = 1
SLAVE = 2


@dataclass
class DofMap:
    """Node/component to equation mapping with constraint metadata.

    Attributes
    ----------
    kind : ndarray (N, 2) uint8
        0 free, 1 Dirichlet, 2 slave (quasi-periodic right boundary).
    index : ndarray (N, 2) int
        Free-equation index for free dofs, the master's free index for
        slaves, -1 for Dirichlet dofs.
    value : ndarray (N, 2) complex
        Dirichlet values (0 elsewhere).
    weight : ndarray (N, 2) complex
        Constraint weight: 1 for free dofs, exp(i*alpha*period) for slaves,
        0 for Dirichlet dofs.
    n_free : int
        Number of free equations.
    phase : complex
        The quasi-periodicity factor.
    """

    kind: np.ndarray
    index: np.ndarray
    value: np.ndarray
    weight: np.ndarray
    n_free: int
    phase: complex

    def expand(self, x: np.ndarray) -> np.ndarray:
        """Scatter a solution vector to nodal values, shape (N, 2) complex."""
        x = np.asarray(x)
        if x.shape != (self.n_free,):
            raise ValueError(f"expected solution of length {self.n_free}")
        safe = np.where(self.index >= 0, self.index, 0)
        out = np.where(self.kind == DIRICHLET, self.value, self.weight * x[safe])
        return out


@dataclass
class SparseSystem:
    """Reduced linear system A x = rhs with its dof map.

    ``matrix`` is CSC (ready for sparse LU); ``rhs`` includes the folded
    Dirichlet data and the layer volume data.
    """

    matrix: sp.csc_matrix
    rhs: np.ndarray
    dofmap: DofMap
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.rhs.shape[0]

    def write_matrix_market(self, path) -> None:
        """Dump the reduced matrix in Matrix Market coordinate format."""
        scipy.io.mmwrite(str(path), self.matrix.tocoo())


def build_dofmap(mesh: Mesh, ctx: WaveContext, amplitude: float = 1.0) -> DofMap:
    """Classify node/component pairs and enumerate the free equations.

    Dirichlet takes precedence over the periodic constraint (corner nodes of
    the truncation line and the surface are fixed on both sides with
    consistent data, since u_inc itself is quasi-periodic).
    """
    n = mesh.n_nodes
    kind = np.zeros((n, 2), dtype=np.uint8)
    value = np.zeros((n, 2), dtype=complex)

    dirichlet = mesh.on_surface | mesh.on_top
    kind[dirichlet, :] = DIRICHLET
    top = np.nonzero(mesh.on_top)[0]
    value[top, :] = incident_field(
        ctx, mesh.nodes[top, 0], mesh.nodes[top, 1], amplitude
    )

    slave = mesh.on_right & ~dirichlet
    kind[slave, :] = SLAVE

    free_mask = kind == FREE
    index = np.full((n, 2), -1, dtype=np.int64)
    index[free_mask] = np.arange(int(free_mask.sum()))

    left_of = np.full(n, -1, dtype=np.int64)
    left_of[mesh.periodic_pairs[:, 1]] = mesh.periodic_pairs[:, 0]
    phase = ctx.phase
    weight = np.where(free_mask, 1.0 + 0.0j, 0.0j)
    for node in np.nonzero(slave)[0]:
        master = left_of[node]
        if master < 0:
            raise RuntimeError(f"right node {node} has no periodic partner")
        if (kind[master] != FREE).any():
            raise RuntimeError(
                f"periodic master {master} of node {node} is constrained"
            )
        index[node, :] = index[master, :]
        weight[node, :] = phase

    return DofMap(
        kind=kind,
        index=index,
        value=value,
        weight=weight,
        n_free=int(free_mask.sum()),
        phase=phase,
    )


def _local_matrices(
    coords: np.ndarray,
    is_pml: np.ndarray,
    ctx: WaveContext,
    profile: PmlProfile,
    quad_degree: int,
    literal_mixed: bool,
) -> np.ndarray:
    """Batched 6x6 element matrices; local dof = 2*vertex + component."""
    m = coords.shape[0]
    d1 = coords[:, 1] - coords[:, 0]
    d2 = coords[:, 2] - coords[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    area = 0.5 * det
    grads = np.empty((m, 3, 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        grads[:, i, 0] = (coords[:, j, 1] - coords[:, k, 1]) / det
        grads[:, i, 1] = (coords[:, k, 0] - coords[:, j, 0]) / det

    # integrals of rho, 1/rho, rho*phi_a*phi_b (area included)
    int_rho = area.astype(complex)
    int_inv = area.astype(complex)
    eye_mass = (1.0 + np.eye(3)) / 12.0
    mass = area[:, None, None] * eye_mass[None, :, :] + 0.0j
    if is_pml.any():
        bary, w = triangle_rule(quad_degree)
        yq = np.einsum("qi,mi->mq", bary, coords[is_pml][:, :, 1])
        rq = rho(profile, yq)
        a_pml = area[is_pml]
        int_rho[is_pml] = a_pml * (rq @ w)
        int_inv[is_pml] = a_pml * ((1.0 / rq) @ w)
        mass[is_pml] = a_pml[:, None, None] * np.einsum(
            "q,mq,qa,qb->mab", w, rq, bary, bary
        )

    lam, mu, om2 = ctx.lam, ctx.mu, ctx.omega**2
    gx, gy = grads[:, :, 0], grads[:, :, 1]
    gxx = np.einsum("ma,mb->mab", gx, gx)
    gyy = np.einsum("ma,mb->mab", gy, gy)
    gxy = np.einsum("ma,mb->mab", gx, gy)  # gxy[m,a,b] = gx_a * gy_b

    k = np.zeros((m, 6, 6), dtype=complex)
    ir = int_rho[:, None, None]
    ii = int_inv[:, None, None]
    aa = area[:, None, None]
    # rows 2b+d (test), cols 2a+c (trial)
    k[:, 0::2, 0::2] = np.swapaxes(
        (lam + 2 * mu) * gxx * ir + mu * gyy * ii - om2 * mass, 1, 2
    )
    k[:, 1::2, 1::2] = np.swapaxes(
        mu * gxx * ir + (lam + 2 * mu) * gyy * ii - om2 * mass, 1, 2
    )
    if literal_mixed:
        # (lam+mu) * (dx(u2) dy(v1) + dx(u1) dy(v2)):
        # [2b, 2a+1] and [2b+1, 2a] are both gx_a*gy_b * area
        k[:, 0::2, 1::2] = np.swapaxes((lam + mu) * gxy * aa, 1, 2)
        k[:, 1::2, 0::2] = np.swapaxes((lam + mu) * gxy * aa, 1, 2)
    else:
        # (lam+mu) * (dy(u2) dx(v1) + dx(u1) dy(v2)):
        # [2b, 2a+1] = gy_a*gx_b * area ; [2b+1, 2a] = gx_a*gy_b * area
        k[:, 0::2, 1::2] = (lam + mu) * gxy * aa
        k[:, 1::2, 0::2] = np.swapaxes((lam + mu) * gxy * aa, 1, 2)
    return k


def element_matrix(
    coords: np.ndarray,
    region: int,
    ctx: WaveContext,
    profile: PmlProfile,
    quad_degree: int = 5,
    literal_mixed: bool = False,
) -> np.ndarray:
    """6x6 element matrix of one triangle (local dof = 2*vertex + component).

    Parameters
    ----------
    coords : ndarray (3, 2)
        CCW vertex coordinates.
    region : int
        0 for the physical domain (exact closed-form integration),
        1 for the layer (rho-weighted quadrature of the given degree).
    ctx, profile
        Wave context and layer profile.
    quad_degree : int
        Triangle quadrature degree used in the layer.
    literal_mixed : bool
        Assemble the mixed term in its literal grouping instead of the
        transpose-equivalent one (see module docstring).

    Returns
    -------
    ndarray (6, 6) complex
    """
    coords = np.asarray(coords, dtype=float)[None, :, :]
    is_pml = np.array([region != PHYSICAL])
    return _local_matrices(coords, is_pml, ctx, profile, quad_degree, literal_mixed)[0]


def assemble(
    mesh: Mesh,
    ctx: WaveContext,
    profile: PmlProfile,
    dofmap: DofMap,
    quad_degree: int = 5,
    amplitude: float = 1.0,
    literal_mixed: bool = False,
) -> SparseSystem:
    """Assemble the reduced system (constraints folded, data lifted).

    Parameters
    ----------
    mesh, ctx, profile, dofmap
        Geometry, wave context, layer profile and the dof classification
        (its Dirichlet data must match ``amplitude``).
    quad_degree : int
        Layer quadrature degree (physical elements are integrated exactly).
    amplitude : float
        Incident amplitude multiplying the volume data of the layer.
    literal_mixed : bool
        Forwarded to the element kernel.

    Returns
    -------
    SparseSystem
    """
    coords = mesh.nodes[mesh.tris]
    is_pml = mesh.region != PHYSICAL
    k_loc = _local_matrices(coords, is_pml, ctx, profile, quad_degree, literal_mixed)

    m = mesh.n_tris
    f_loc = np.zeros((m, 6), dtype=complex)
    if is_pml.any():
        bary, w = triangle_rule(quad_degree)
        pts = np.einsum("qi,mid->mqd", bary, coords[is_pml])
        g = pml_source(ctx, profile, pts[..., 0], pts[..., 1], amplitude)
        area = mesh.areas()[is_pml]
        # f[2b+d] = -area * sum_q w_q g_d(q) phi_b(q)
        f_pml = -area[:, None, None] * np.einsum("q,mqd,qb->mbd", w, g, bary)
        f_loc[is_pml] = f_pml.reshape(-1, 6)

    # local dof (slot) -> (node, component)
    nodes6 = mesh.tris[:, [0, 0, 1, 1, 2, 2]]
    comp6 = np.tile([0, 1], 3)
    kind6 = dofmap.kind[nodes6, comp6]
    idx6 = dofmap.index[nodes6, comp6]
    w6 = dofmap.weight[nodes6, comp6]
    val6 = dofmap.value[nodes6, comp6]

    ii = np.repeat(np.arange(6), 6)
    jj = np.tile(np.arange(6), 6)
    k36 = k_loc.reshape(m, 36)
    rows = idx6[:, ii]
    cols = idx6[:, jj]
    vals = np.conj(w6[:, ii]) * k36 * w6[:, jj]
    row_live = kind6[:, ii] != DIRICHLET
    col_live = kind6[:, jj] != DIRICHLET

    keep = row_live & col_live
    matrix = sp.coo_matrix(
        (vals[keep], (rows[keep], cols[keep])),
        shape=(dofmap.n_free, dofmap.n_free),
    ).tocsc()
    matrix.sum_duplicates()
    matrix.eliminate_zeros()

    rhs = np.zeros(dofmap.n_free, dtype=complex)
    lift = row_live & ~col_live
    if lift.any():
        contrib = -(np.conj(w6[:, ii]) * k36 * val6[:, jj])
        np.add.at(rhs, rows[lift], contrib[lift])
    load_live = kind6 != DIRICHLET
    np.add.at(
        rhs,
        idx6[load_live],
        (np.conj(w6) * f_loc)[load_live],
    )

    return SparseSystem(
        matrix=matrix,
        rhs=rhs,
        dofmap=dofmap,
        meta={
            "n_nodes": mesh.n_nodes,
            "n_tris": mesh.n_tris,
            "nnz": int(matrix.nnz),
            "quad_degree": int(quad_degree),
        },
    )
