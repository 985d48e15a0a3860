"""Periodic grating meshes: generation, conforming bisection, marking.

The computational domain is one period of the strip between the grating
surface y = s(x) (a piecewise-linear function graph) and the truncation line
y = b + delta on top of the PML.  The initial mesh is structured:

* x-breakpoints are the profile vertices, each segment subdivided so no
  surface edge exceeds the target size h0;
* below the interface y = b every column carries the same graded parameter
  t_k = k/K1 (so y = s_i + t_k*(b - s_i)), which makes y = b an exact mesh
  line and keeps the left/right boundary discretizations mirror images;
* the layer b < y < b + delta is meshed uniformly with the same rows in
  every column.

Each quad is split along the south-west/north-east diagonal into two
counter-clockwise triangles.  Every triangle stores a *refinement edge*
(local index; edge k is the edge opposite local vertex k).  Refinement is
newest-vertex bisection: a triangle is cut along its refinement edge, the
two children adopt the remaining original edges as their refinement edges,
and marked sets are closed recursively so the result is conforming (no
hanging nodes).  Edges on the left boundary are paired with their mirror
images on the right; the closure propagates splits across pairs, so the two
traces stay mirror images forever and quasi-periodic constraints remain
exact.

Marking uses the bulk (Dörfler) criterion on squared indicators: sort
descending, take the smallest prefix whose squared sum exceeds tau^2 times
the total, break ties by lower element index.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, hypot

import numpy as np

from .pml import PmlProfile
from .waves import WaveContext

__all__ = [
    "GeometryError",
    "GratingProfile",
    "Mesh",
    "flat_profile",
    "sharp_profile",
    "load_profile",
    "generate_initial",
    "bisect",
    "mark",
    "locate_corner_fraction",
    "write_vtk",
]

#: region labels
PHYSICAL = 0
PML = 1


class GeometryError(ValueError):
    """Invalid grating geometry or incompatible mesh parameters."""


@dataclass(frozen=True)
class GratingProfile:
    """Piecewise-linear grating surface over one period.

    ``vertices`` is an (K, 2) array with strictly increasing x, x[0] = 0,
    and matching heights at both ends (the profile continues periodically).
    """

    vertices: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 2:
            raise GeometryError("profile needs an (K>=2, 2) vertex array")
        if not np.all(np.isfinite(v)):
            raise GeometryError("profile vertices must be finite")
        if v[0, 0] != 0.0:
            raise GeometryError(f"profile must start at x = 0, got {v[0, 0]}")
        if not np.all(np.diff(v[:, 0]) > 0.0):
            raise GeometryError(
                "profile x-coordinates must increase strictly "
                "(the surface must be a function graph)"
            )
        scale = max(1.0, float(np.abs(v).max()))
        if abs(v[-1, 1] - v[0, 1]) > 1e-12 * scale:
            raise GeometryError(
                f"profile heights at x = 0 and x = period differ: "
                f"{v[0, 1]} vs {v[-1, 1]}"
            )
        v = v.copy()
        v[-1, 1] = v[0, 1]  # snap: exact periodic closure
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def period(self) -> float:
        return float(self.vertices[-1, 0] - self.vertices[0, 0])

    @property
    def max_height(self) -> float:
        return float(self.vertices[:, 1].max())

    @property
    def min_height(self) -> float:
        return float(self.vertices[:, 1].min())

    def height(self, x: np.ndarray) -> np.ndarray:
        """Surface height s(x) (no periodic wrapping; x in [0, period])."""
        return np.interp(np.asarray(x, dtype=float), self.vertices[:, 0], self.vertices[:, 1])

    @property
    def is_flat_at_zero(self) -> bool:
        """True when the surface is exactly the line y = 0."""
        return bool(np.all(self.vertices[:, 1] == 0.0))


def flat_profile(period: float) -> GratingProfile:
    """Flat grating at height 0."""
    return GratingProfile(np.array([[0.0, 0.0], [float(period), 0.0]]))


def sharp_profile(period: float) -> GratingProfile:
    """Sawtooth with 45-degree flanks and a reentrant 270-degree tip."""
    p = float(period)
    return GratingProfile(np.array([[0.0, 0.0], [p / 2.0, p / 2.0], [p, 0.0]]))


def load_profile(path) -> GratingProfile:
    """Read a two-column (x, y) text file ('#' comments) into a profile."""
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise GeometryError(f"cannot read profile file {path!r}: {exc}") from exc
    if data.shape[1] != 2:
        raise GeometryError(
            f"profile file {path!r} must have two columns, got {data.shape[1]}"
        )
    return GratingProfile(data)


class Mesh:
    """Triangulation of one period with refinement-edge bookkeeping.

    Attributes
    ----------
    nodes : ndarray (N, 2) float
    tris : ndarray (M, 3) int
        Counter-clockwise vertex triples.
    region : ndarray (M,) uint8
        0 = physical domain (y <= b), 1 = PML layer.
    ref_edge : ndarray (M,) uint8
        Local index of the refinement edge (edge k is opposite vertex k).
    on_surface, on_gamma, on_top, on_left, on_right : ndarray (N,) bool
        Node membership of the grating surface, the interface y = b, the
        truncation line y = b + delta, and the vertical period boundaries.
    periodic_pairs : ndarray (P, 2) int
        Rows (left node, mirrored right node); y-coordinates match exactly.
    period, b, top : float
        Geometry constants.
    """

    def __init__(
        self,
        nodes: np.ndarray,
        tris: np.ndarray,
        region: np.ndarray,
        ref_edge: np.ndarray,
        on_surface: np.ndarray,
        on_gamma: np.ndarray,
        on_top: np.ndarray,
        on_left: np.ndarray,
        on_right: np.ndarray,
        periodic_pairs: np.ndarray,
        period: float,
        b: float,
        top: float,
    ) -> None:
        self.nodes = np.asarray(nodes, dtype=float)
        self.tris = np.asarray(tris, dtype=np.int64)
        self.region = np.asarray(region, dtype=np.uint8)
        self.ref_edge = np.asarray(ref_edge, dtype=np.uint8)
        self.on_surface = np.asarray(on_surface, dtype=bool)
        self.on_gamma = np.asarray(on_gamma, dtype=bool)
        self.on_top = np.asarray(on_top, dtype=bool)
        self.on_left = np.asarray(on_left, dtype=bool)
        self.on_right = np.asarray(on_right, dtype=bool)
        self.periodic_pairs = np.asarray(periodic_pairs, dtype=np.int64)
        self.period = float(period)
        self.b = float(b)
        self.top = float(top)
        self._cache: dict = {}

    # -- sizes ---------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_tris(self) -> int:
        return self.tris.shape[0]

    # -- geometry ------------------------------------------------------

    def areas(self) -> np.ndarray:
        """Element areas (positive for the stored CCW orientation)."""
        if "areas" not in self._cache:
            self._signed_geometry()
        return self._cache["areas"]

    def grads(self) -> np.ndarray:
        """P1 basis gradients, shape (M, 3, 2): grads[t, i] = grad(phi_i)."""
        if "grads" not in self._cache:
            self._signed_geometry()
        return self._cache["grads"]

    def diameters(self) -> np.ndarray:
        """Longest edge length per element (the mesh-size h_T)."""
        if "diam" not in self._cache:
            p = self.nodes[self.tris]
            e = np.stack(
                [p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1
            )
            self._cache["diam"] = np.linalg.norm(e, axis=2).max(axis=1)
        return self._cache["diam"]

    def _signed_geometry(self) -> None:
        p = self.nodes[self.tris]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        grads = np.empty((self.n_tris, 3, 2))
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            grads[:, i, 0] = (p[:, j, 1] - p[:, k, 1]) / det
            grads[:, i, 1] = (p[:, k, 0] - p[:, j, 0]) / det
        self._cache["areas"] = 0.5 * det
        self._cache["grads"] = grads

    def edge_structure(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Unique edges, per-triangle edge ids, edge-to-triangle adjacency.

        Returns
        -------
        edges : ndarray (E, 2) int
            Node pairs, sorted within each row.
        tri_edges : ndarray (M, 3) int
            tri_edges[t, k] is the edge id opposite local vertex k.
        edge_tri : ndarray (E, 2) int
            Adjacent triangle ids (-1 for the missing side of boundary edges).
        """
        if "edges" not in self._cache:
            t = self.tris
            m = t.shape[0]
            pairs = np.stack(
                [t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=1
            ).reshape(-1, 2)
            pairs = np.sort(pairs, axis=1)
            key = pairs[:, 0] * np.int64(self.n_nodes) + pairs[:, 1]
            ukey, inv = np.unique(key, return_inverse=True)
            edges = np.stack([ukey // self.n_nodes, ukey % self.n_nodes], axis=1)
            tri_edges = inv.reshape(m, 3)
            counts = np.bincount(inv, minlength=len(ukey))
            if counts.max(initial=0) > 2:
                raise RuntimeError("non-manifold edge detected")
            order = np.argsort(inv, kind="stable")
            tri_of = order // 3
            starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
            edge_tri = np.full((len(ukey), 2), -1, dtype=np.int64)
            edge_tri[:, 0] = tri_of[starts]
            two = counts == 2
            edge_tri[two, 1] = tri_of[starts[two] + 1]
            self._cache["edges"] = edges
            self._cache["tri_edges"] = tri_edges
            self._cache["edge_tri"] = edge_tri
        return self._cache["edges"], self._cache["tri_edges"], self._cache["edge_tri"]

    # -- integrity (used by the test-suite) -----------------------------

    def validate(self, geom: GratingProfile | None = None) -> None:
        """Raise AssertionError when a mesh invariant is violated."""
        assert np.all(self.areas() > 0.0), "non-CCW or degenerate element"
        edges, _, edge_tri = self.edge_structure()
        boundary = edge_tri[:, 1] < 0
        mid = 0.5 * (self.nodes[edges[:, 0]] + self.nodes[edges[:, 1]])
        ok = np.zeros(len(edges), dtype=bool)
        ok |= (self.nodes[edges[:, 0], 0] == 0.0) & (self.nodes[edges[:, 1], 0] == 0.0)
        ok |= (self.nodes[edges[:, 0], 0] == self.period) & (
            self.nodes[edges[:, 1], 0] == self.period
        )
        ok |= (self.nodes[edges[:, 0], 1] == self.top) & (
            self.nodes[edges[:, 1], 1] == self.top
        )
        if geom is not None:
            on_surf = (
                np.abs(geom.height(mid[:, 0]) - mid[:, 1]) <= 1e-9 * max(1.0, self.top)
            )
            ok |= on_surf
        else:
            ok |= self.on_surface[edges[:, 0]] & self.on_surface[edges[:, 1]]
        assert np.all(ok[boundary]), "hanging node: interior edge with one neighbor"
        # flags vs geometry
        assert np.all(self.nodes[self.on_left, 0] == 0.0)
        assert np.all(self.nodes[self.on_right, 0] == self.period)
        assert np.all(self.nodes[self.on_gamma, 1] == self.b)
        assert np.all(self.nodes[self.on_top, 1] == self.top)
        # periodic pairing is a bijection with exactly matching heights
        left, right = self.periodic_pairs[:, 0], self.periodic_pairs[:, 1]
        assert np.array_equal(np.sort(left), np.nonzero(self.on_left)[0])
        assert np.array_equal(np.sort(right), np.nonzero(self.on_right)[0])
        assert np.all(self.nodes[left, 1] == self.nodes[right, 1])


def generate_initial(
    geom: GratingProfile,
    ctx: WaveContext,
    pml_profile: PmlProfile,
    h0: float,
) -> Mesh:
    """Build the structured initial mesh for one period.

    Parameters
    ----------
    geom : GratingProfile
        Surface; its period must match ctx.period and its maximum height
        must stay strictly below ctx.gamma_height.
    ctx : WaveContext
    pml_profile : PmlProfile
        Supplies the layer thickness; pml_profile.b must equal
        ctx.gamma_height.
    h0 : float
        Target edge size of the initial mesh.

    Returns
    -------
    Mesh

    Raises
    ------
    GeometryError
        For mismatched periods/heights or a surface reaching y = b.
    """
    if h0 <= 0.0:
        raise GeometryError(f"h0 must be positive, got {h0}")
    if abs(geom.period - ctx.period) > 1e-12 * max(1.0, ctx.period):
        raise GeometryError(
            f"profile period {geom.period} != context period {ctx.period}"
        )
    b = ctx.gamma_height
    if abs(pml_profile.b - b) > 1e-12 * max(1.0, abs(b)):
        raise GeometryError(
            f"pml profile starts at {pml_profile.b}, context has b = {b}"
        )
    if geom.max_height >= b:
        raise GeometryError(
            f"surface reaches height {geom.max_height} >= gamma_height {b}"
        )

    # column breakpoints: profile vertices plus chord-length subdivision
    verts = geom.vertices
    xs: list[float] = [float(verts[0, 0])]
    ys: list[float] = [float(verts[0, 1])]
    for k in range(len(verts) - 1):
        x0, y0 = verts[k]
        x1, y1 = verts[k + 1]
        nseg = max(1, ceil(hypot(x1 - x0, y1 - y0) / h0))
        for j in range(1, nseg + 1):
            xs.append(float(x0 + (x1 - x0) * j / nseg))
            ys.append(float(y0 + (y1 - y0) * j / nseg))
    xs[-1] = float(ctx.period)  # exact right boundary
    ys[-1] = ys[0]              # exact mirror of the left column
    col_x = np.array(xs)
    col_y = np.array(ys)
    nx = len(col_x) - 1
    if nx < 2:
        raise GeometryError(
            f"h0 = {h0} yields fewer than two columns across the period"
        )

    k1 = max(1, ceil((b - geom.min_height) / h0))
    k2 = max(1, ceil(pml_profile.delta / h0))
    rows = k1 + k2 + 1
    top = b + pml_profile.delta

    # node grid, column-major: node id = column * rows + row
    y_grid = np.empty((nx + 1, rows))
    t_phys = np.arange(k1 + 1) / k1
    y_grid[:, : k1 + 1] = col_y[:, None] + (b - col_y)[:, None] * t_phys[None, :]
    y_grid[:, k1] = b  # exact interface line
    t_pml = np.arange(1, k2 + 1) / k2
    y_grid[:, k1 + 1 :] = b + pml_profile.delta * t_pml[None, :]
    y_grid[:, -1] = top  # exact truncation line
    nodes = np.stack(
        [np.repeat(col_x, rows), y_grid.reshape(-1)], axis=1
    )
    n_nodes = nodes.shape[0]

    # flags
    row_idx = np.tile(np.arange(rows), nx + 1)
    col_idx = np.repeat(np.arange(nx + 1), rows)
    on_surface = row_idx == 0
    on_gamma = row_idx == k1
    on_top = row_idx == rows - 1
    on_left = col_idx == 0
    on_right = col_idx == nx

    # triangles: quads split along the (i, r) -> (i+1, r+1) diagonal
    i = np.repeat(np.arange(nx), rows - 1)
    r = np.tile(np.arange(rows - 1), nx)
    a = i * rows + r
    bq = (i + 1) * rows + r
    c = (i + 1) * rows + r + 1
    d = i * rows + r + 1
    tris = np.empty((2 * len(a), 3), dtype=np.int64)
    tris[0::2] = np.stack([a, bq, c], axis=1)
    tris[1::2] = np.stack([a, c, d], axis=1)
    region = np.where(np.repeat(r, 2) < k1, PHYSICAL, PML).astype(np.uint8)

    periodic_pairs = np.stack(
        [np.arange(rows), nx * rows + np.arange(rows)], axis=1
    )

    mesh = Mesh(
        nodes=nodes,
        tris=tris,
        region=region,
        ref_edge=np.zeros(len(tris), dtype=np.uint8),
        on_surface=on_surface,
        on_gamma=on_gamma,
        on_top=on_top,
        on_left=on_left,
        on_right=on_right,
        periodic_pairs=periodic_pairs,
        period=ctx.period,
        b=b,
        top=top,
    )
    mesh.ref_edge = _longest_edge(mesh)
    return mesh


def _longest_edge(mesh: Mesh) -> np.ndarray:
    """Local index of the longest edge per element (ties: lowest index)."""
    p = mesh.nodes[mesh.tris]
    lengths = np.stack(
        [
            np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
            np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
            np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
        ],
        axis=1,
    )
    return np.argmax(lengths, axis=1).astype(np.uint8)


def _edge_partners(mesh: Mesh, edges: np.ndarray) -> np.ndarray:
    """Map each left/right boundary edge to its mirror edge id (-1 elsewhere)."""
    n = mesh.n_nodes
    right_of = np.full(n, -1, dtype=np.int64)
    left_of = np.full(n, -1, dtype=np.int64)
    right_of[mesh.periodic_pairs[:, 0]] = mesh.periodic_pairs[:, 1]
    left_of[mesh.periodic_pairs[:, 1]] = mesh.periodic_pairs[:, 0]

    key = edges[:, 0] * np.int64(n) + edges[:, 1]
    lookup = {int(k): i for i, k in enumerate(key)}

    partner = np.full(len(edges), -1, dtype=np.int64)
    left_mask = mesh.on_left[edges[:, 0]] & mesh.on_left[edges[:, 1]]
    for e in np.nonzero(left_mask)[0]:
        a, bb = right_of[edges[e, 0]], right_of[edges[e, 1]]
        if a < 0 or bb < 0:
            raise RuntimeError("unpaired node on the left boundary")
        lo, hi = (a, bb) if a < bb else (bb, a)
        pe = lookup.get(int(lo * n + hi))
        if pe is None:
            raise RuntimeError("left boundary edge without mirrored right edge")
        partner[e] = pe
        partner[pe] = e
    return partner


def bisect(mesh: Mesh, marked: np.ndarray) -> Mesh:
    """Newest-vertex bisection of the marked elements with conforming closure.

    Parameters
    ----------
    mesh : Mesh
    marked : array_like of int
        Element indices to refine (empty input returns an identical copy).

    Returns
    -------
    Mesh
        A new conforming mesh; the input is left untouched.
    """
    marked = np.unique(np.asarray(marked, dtype=np.int64))
    if marked.size and (marked[0] < 0 or marked[-1] >= mesh.n_tris):
        raise IndexError("marked element index out of range")

    edges, tri_edges, _ = mesh.edge_structure()
    partner = _edge_partners(mesh, edges)
    n_edges = len(edges)

    split = np.zeros(n_edges, dtype=bool)
    if marked.size:
        split[tri_edges[marked, mesh.ref_edge[marked]]] = True

    # closure: a triangle with any split edge must split its refinement edge;
    # splits mirror across the periodic pairing
    arange_m = np.arange(mesh.n_tris)
    while True:
        before = int(split.sum())
        has_partner = partner >= 0
        split[partner[split & has_partner]] = True
        touched = split[tri_edges].any(axis=1)
        split[tri_edges[arange_m[touched], mesh.ref_edge[touched]]] = True
        if int(split.sum()) == before:
            break

    eids = np.nonzero(split)[0]
    if eids.size == 0:
        return Mesh(
            mesh.nodes.copy(), mesh.tris.copy(), mesh.region.copy(),
            mesh.ref_edge.copy(), mesh.on_surface.copy(), mesh.on_gamma.copy(),
            mesh.on_top.copy(), mesh.on_left.copy(), mesh.on_right.copy(),
            mesh.periodic_pairs.copy(), mesh.period, mesh.b, mesh.top,
        )

    # new nodes at split-edge midpoints; flags propagate by conjunction
    n_old = mesh.n_nodes
    mid = np.full(n_edges, -1, dtype=np.int64)
    mid[eids] = n_old + np.arange(eids.size)
    new_coords = 0.5 * (mesh.nodes[edges[eids, 0]] + mesh.nodes[edges[eids, 1]])
    nodes = np.vstack([mesh.nodes, new_coords])

    def _extend(flag: np.ndarray) -> np.ndarray:
        return np.concatenate([flag, flag[edges[eids, 0]] & flag[edges[eids, 1]]])

    on_surface = _extend(mesh.on_surface)
    on_gamma = _extend(mesh.on_gamma)
    on_top = _extend(mesh.on_top)
    on_left = _extend(mesh.on_left)
    on_right = _extend(mesh.on_right)

    left_split = eids[(partner[eids] >= 0) & mesh.on_left[edges[eids, 0]]]
    new_pairs = np.stack([mid[left_split], mid[partner[left_split]]], axis=1)
    periodic_pairs = (
        np.vstack([mesh.periodic_pairs, new_pairs])
        if new_pairs.size
        else mesh.periodic_pairs.copy()
    )

    # rebuild triangles
    affected = split[tri_edges].any(axis=1)
    keep = ~affected
    out_tris = [mesh.tris[keep]]
    out_ref = [mesh.ref_edge[keep]]
    out_region = [mesh.region[keep]]

    add_tris: list[tuple[int, int, int]] = []
    add_ref: list[int] = []
    add_region: list[int] = []
    tris_arr = mesh.tris
    ref_arr = mesh.ref_edge
    region_arr = mesh.region
    for t in np.nonzero(affected)[0]:
        re = int(ref_arr[t])
        order = ((re, (re + 1) % 3, (re + 2) % 3))
        v0, v1, v2 = (int(tris_arr[t, o]) for o in order)
        e0, e1, e2 = (int(tri_edges[t, o]) for o in order)
        m0 = int(mid[e0])
        if m0 < 0:
            raise RuntimeError("closure failed: refinement edge not split")
        reg = int(region_arr[t])
        m2 = int(mid[e2])
        if m2 >= 0:
            add_tris.append((m0, v0, m2)); add_ref.append(2); add_region.append(reg)
            add_tris.append((m0, m2, v1)); add_ref.append(1); add_region.append(reg)
        else:
            add_tris.append((v0, v1, m0)); add_ref.append(2); add_region.append(reg)
        m1 = int(mid[e1])
        if m1 >= 0:
            add_tris.append((m0, v2, m1)); add_ref.append(2); add_region.append(reg)
            add_tris.append((m0, m1, v0)); add_ref.append(1); add_region.append(reg)
        else:
            add_tris.append((v0, m0, v2)); add_ref.append(1); add_region.append(reg)

    out_tris.append(np.array(add_tris, dtype=np.int64).reshape(-1, 3))
    out_ref.append(np.array(add_ref, dtype=np.uint8))
    out_region.append(np.array(add_region, dtype=np.uint8))

    return Mesh(
        nodes=nodes,
        tris=np.vstack(out_tris),
        region=np.concatenate(out_region),
        ref_edge=np.concatenate(out_ref),
        on_surface=on_surface,
        on_gamma=on_gamma,
        on_top=on_top,
        on_left=on_left,
        on_right=on_right,
        periodic_pairs=periodic_pairs,
        period=mesh.period,
        b=mesh.b,
        top=mesh.top,
    )


def mark(eta_hat: np.ndarray, tau: float = 0.5) -> np.ndarray:
    """Bulk marking: smallest prefix with sum eta^2 > tau^2 * total.

    Parameters
    ----------
    eta_hat : array_like of float
        Non-negative element indicators.
    tau : float
        Bulk parameter in [0, 1]; larger values mark more elements.

    Returns
    -------
    ndarray of int
        Sorted indices of the marked elements (empty when all indicators
        vanish).
    """
    eta = np.asarray(eta_hat, dtype=float)
    if np.any(eta < 0) or not np.all(np.isfinite(eta)):
        raise ValueError("indicators must be finite and non-negative")
    eta2 = eta**2
    total = float(eta2.sum())
    if total <= 0.0:
        return np.empty(0, dtype=np.int64)
    order = np.lexsort((np.arange(eta2.size), -eta2))
    csum = np.cumsum(eta2[order])
    k = int(np.searchsorted(csum, tau * tau * total, side="right"))
    k = min(k, eta2.size - 1)
    return np.sort(order[: k + 1])


def locate_corner_fraction(mesh: Mesh, point, radius: float) -> float:
    """Fraction of elements whose centroid lies within ``radius`` of point."""
    if radius < 0.0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    centroids = mesh.nodes[mesh.tris].mean(axis=1)
    d = np.linalg.norm(centroids - np.asarray(point, dtype=float), axis=1)
    return float(np.count_nonzero(d <= radius)) / mesh.n_tris


def write_vtk(
    mesh: Mesh,
    path,
    point_data: dict | None = None,
    cell_data: dict | None = None,
) -> None:
    """Write the mesh (legacy ASCII VTK) with optional scalar fields.

    Complex arrays are split automatically into ``name_re`` / ``name_im``.
    """

    def _split(data: dict | None) -> list[tuple[str, np.ndarray]]:
        out = []
        for name, arr in (data or {}).items():
            arr = np.asarray(arr)
            if np.iscomplexobj(arr):
                out.append((f"{name}_re", arr.real))
                out.append((f"{name}_im", arr.imag))
            else:
                out.append((name, arr.astype(float)))
        return out

    lines = [
        "# vtk DataFile Version 3.0",
        "periodic grating mesh",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_nodes} double",
    ]
    lines.extend(f"{x:.17g} {y:.17g} 0" for x, y in mesh.nodes)
    lines.append(f"CELLS {mesh.n_tris} {4 * mesh.n_tris}")
    lines.extend(f"3 {a} {b} {c}" for a, b, c in mesh.tris)
    lines.append(f"CELL_TYPES {mesh.n_tris}")
    lines.extend("5" for _ in range(mesh.n_tris))

    pdata = _split(point_data)
    if pdata:
        lines.append(f"POINT_DATA {mesh.n_nodes}")
        for name, arr in pdata:
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(f"{v:.17g}" for v in arr)
    cdata = _split(cell_data)
    if cdata:
        lines.append(f"CELL_DATA {mesh.n_tris}")
        for name, arr in cdata:
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(f"{v:.17g}" for v in arr)

    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
