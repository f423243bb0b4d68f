"""Topology-constrained compliance minimization over skeleton degrees of
freedom: implicit primitive union -> smoothed-Heaviside voxel densities ->
linear-elastic equilibrium -> analytic gradient -> back-tracking descent.

Shape-opt primitives are deliberately coarse: 8 radius samples per
skeletal vertex and 12 (3 stations x 4 azimuths) per edge, interpolated
with smooth squared-cosine weights so the density gradient is analytic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

EPSILON = 0.1
DENSITY_FLOOR = 1e-4
N_VERTEX_RADII = 8
N_EDGE_STATIONS = 3
N_EDGE_AZIMUTHS = 4
N_EDGE_RADII = N_EDGE_STATIONS * N_EDGE_AZIMUTHS

# eight fixed sample directions (cube corners)
VERTEX_DIRS = np.array(
    [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
    dtype=np.float64,
) / np.sqrt(3.0)


def heaviside(x, gamma: float):
    """C1 cubic smoothed step; returns (value, derivative)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    x = np.asarray(x, dtype=np.float64)
    val = np.where(
        x < -gamma,
        0.0,
        np.where(
            x > gamma,
            1.0,
            -(x ** 3) / (4 * gamma ** 3) + 3 * x / (4 * gamma) + 0.5,
        ),
    )
    der = np.where(
        np.abs(x) <= gamma, -3 * x ** 2 / (4 * gamma ** 3) + 3 / (4 * gamma), 0.0
    )
    return val, der


def rvachev_union(phis: np.ndarray):
    """Left-fold Rvachev disjunction over axis 0.

    Returns (f, df) with df[k] = d f / d phi_k.
    """
    phis = np.asarray(phis, dtype=np.float64)
    n = phis.shape[0]
    acc = phis[0].copy()
    mults = [np.ones_like(acc)]
    for k in range(1, n):
        t = phis[k]
        root = np.sqrt(acc ** 2 + t ** 2)
        safe = np.where(root > 0, root, 1.0)
        ds = 1.0 + np.where(root > 0, acc / safe, 0.0)
        dt = 1.0 + np.where(root > 0, t / safe, 0.0)
        acc = acc + t + root
        mults = [m * ds for m in mults]
        mults.append(dt)
    return acc, np.stack(mults)


@dataclass
class VoxelGrid:
    dims: Tuple[int, int, int]
    h: float
    origin: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if min(self.dims) < 2:
            raise ValueError("grid dims must be >= 2 in every direction")
        if self.h <= 0:
            raise ValueError("cell size must be positive")

    @property
    def n_cells(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    def centers(self) -> np.ndarray:
        nx, ny, nz = self.dims
        o = np.asarray(self.origin)
        idx = np.stack(
            np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij"),
            axis=-1,
        ).reshape(-1, 3)
        return o + (idx + 0.5) * self.h

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        o = np.asarray(self.origin)
        return o, o + np.asarray(self.dims) * self.h


@dataclass
class ShapeOptProblem:
    grid: VoxelGrid
    vertices: np.ndarray               # (n, 3) skeleton vertex positions
    edges: List[Tuple[int, int]]
    vertex_radii: np.ndarray           # (n, 8)
    edge_radii: np.ndarray             # (m, 12)
    loads: np.ndarray                  # (ndof,) nodal forces
    fixed: np.ndarray                  # bool mask over nodal dofs
    volume_fraction: float = 0.2
    volume_weight: float = 1e3
    youngs: float = 1.0
    poisson: float = 0.3
    edge_frames: Optional[np.ndarray] = None  # (m, 2, 3) fixed azimuth frames

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.vertex_radii = np.asarray(self.vertex_radii, dtype=np.float64).reshape(
            len(self.vertices), N_VERTEX_RADII
        )
        self.edges = [tuple(int(x) for x in e) for e in self.edges]
        self.edge_radii = np.asarray(self.edge_radii, dtype=np.float64).reshape(
            len(self.edges), N_EDGE_RADII
        )
        if not (0 < self.volume_fraction <= 1):
            raise ValueError("volume fraction must be in (0, 1]")
        if self.edge_frames is None:
            frames = []
            for i, j in self.edges:
                u = self.vertices[j] - self.vertices[i]
                u = u / np.linalg.norm(u)
                ref = np.array([1.0, 0.0, 0.0])
                if abs(u.dot(ref)) > 0.9:
                    ref = np.array([0.0, 1.0, 0.0])
                e1 = np.cross(u, ref)
                e1 /= np.linalg.norm(e1)
                e2 = np.cross(u, e1)
                frames.append([e1, e2])
            self.edge_frames = np.asarray(frames).reshape(len(self.edges), 2, 3)

    # --- DOF packing -------------------------------------------------------

    def pack(self, vertices=None, vradii=None, eradii=None) -> np.ndarray:
        v = self.vertices if vertices is None else vertices
        vr = self.vertex_radii if vradii is None else vradii
        er = self.edge_radii if eradii is None else eradii
        return np.concatenate([v.ravel(), vr.ravel(), er.ravel()])

    def unpack(self, x: np.ndarray):
        n = len(self.vertices)
        m = len(self.edges)
        v = x[: 3 * n].reshape(n, 3)
        vr = x[3 * n : 3 * n + N_VERTEX_RADII * n].reshape(n, N_VERTEX_RADII)
        er = x[3 * n + N_VERTEX_RADII * n :].reshape(m, N_EDGE_RADII)
        return v, vr, er

    @property
    def n_dofs(self) -> int:
        return 3 * len(self.vertices) + N_VERTEX_RADII * len(self.vertices) + \
            N_EDGE_RADII * len(self.edges)


# ---------------------------------------------------------------------------
# primitive implicits with analytic derivatives


def _vertex_implicit(X: np.ndarray, c: np.ndarray, r8: np.ndarray):
    """E(x), dE/dc (q,3), dE/dr (q,8) for a vertex primitive."""
    delta = X - c
    rho = np.linalg.norm(delta, axis=1)
    q = len(X)
    E = np.empty(q)
    dc = np.zeros((q, 3))
    dr = np.zeros((q, N_VERTEX_RADII))
    deg = rho < 1e-12
    if deg.any():
        E[deg] = -(EPSILON + r8.mean())
    act = ~deg
    d = delta[act] / rho[act, None]
    a = np.maximum(0.0, d @ VERTEX_DIRS.T)      # (qa, 8)
    m = a ** 2
    M = m.sum(axis=1)
    w = m / M[:, None]
    r = w @ r8
    E[act] = rho[act] - (EPSILON + r)
    dr[act] = -w
    # grad_d r
    grad_m = 2.0 * a[:, :, None] * VERTEX_DIRS[None, :, :]   # (qa, 8, 3)
    sum_grad_m = grad_m.sum(axis=1)                          # (qa, 3)
    grad_w = (grad_m * M[:, None, None] - m[:, :, None] * sum_grad_m[:, None, :]) / (
        M[:, None, None] ** 2
    )
    grad_d_r = np.einsum("qjk,j->qk", grad_w, r8)            # (qa, 3)
    proj = grad_d_r - d * np.einsum("qk,qk->q", grad_d_r, d)[:, None]
    dc[act] = -d + proj / rho[act, None]
    return E, dc, dr


def _azimuth_weights(phi: np.ndarray):
    """Squared-cosine weights over 4 fixed azimuths and their derivative."""
    phis = np.arange(N_EDGE_AZIMUTHS) * (2 * np.pi / N_EDGE_AZIMUTHS)
    diff = phi[:, None] - phis[None, :]
    c = np.cos(diff)
    pos = c > 0
    m = np.where(pos, c ** 2, 0.0)
    dm = np.where(pos, -2.0 * c * np.sin(diff), 0.0)
    M = m.sum(axis=1)
    dM = dm.sum(axis=1)
    w = m / M[:, None]
    dw = (dm * M[:, None] - m * dM[:, None]) / (M[:, None] ** 2)
    return w, dw


def _station_weights(t: np.ndarray):
    """Hat-function weights over stations {0, 1/2, 1} and derivatives."""
    s = np.linspace(0.0, 1.0, N_EDGE_STATIONS)
    dsp = s[1] - s[0]
    w = np.maximum(0.0, 1.0 - np.abs(t[:, None] - s[None, :]) / dsp)
    dw = np.where(
        (np.abs(t[:, None] - s[None, :]) < dsp),
        -np.sign(t[:, None] - s[None, :]) / dsp,
        0.0,
    )
    dw[w <= 0] = 0.0
    return w, dw


def _edge_implicit(X, a, b, frame, r12):
    """E(x), dE/da, dE/db (q,3), dE/dr (q,12) for an edge primitive."""
    qn = len(X)
    u = b - a
    D = float(u.dot(u))
    n_val = (X - a) @ u
    t_raw = n_val / D
    t = np.clip(t_raw, 0.0, 1.0)
    interior = (t_raw > 0.0) & (t_raw < 1.0)
    p = a + t[:, None] * u
    delta = X - p
    rho = np.linalg.norm(delta, axis=1)
    E = np.empty(qn)
    da = np.zeros((qn, 3))
    db = np.zeros((qn, 3))
    dr = np.zeros((qn, N_EDGE_RADII))
    deg = rho < 1e-12
    if deg.any():
        E[deg] = -(EPSILON + r12.min())
    act = ~deg
    dl = delta[act]
    rh = rho[act]
    tt = t[act]
    inter = interior[act]
    e1, e2 = frame
    y1 = dl @ e1
    y2 = dl @ e2
    rr = y1 ** 2 + y2 ** 2
    phi = np.arctan2(y2, y1)
    w_az, dw_az = _azimuth_weights(phi)
    axial_deg = rr < 1e-18
    w_az[axial_deg] = 1.0 / N_EDGE_AZIMUTHS
    dw_az[axial_deg] = 0.0
    w_st, dw_st = _station_weights(tt)
    R = r12.reshape(N_EDGE_STATIONS, N_EDGE_AZIMUTHS)
    r = np.einsum("qm,mn,qn->q", w_st, R, w_az)
    E[act] = rh - (EPSILON + r)
    dr[act] = (w_st[:, :, None] * w_az[:, None, :]).reshape(len(rh), -1)
    dr[act] *= -1.0

    # dt/da, dt/db (zero when clamped)
    grad_t_a = np.where(
        inter[:, None],
        (-(u[None, :] + (X[act] - a)) * D + 2 * n_val[act][:, None] * u[None, :]) / D ** 2,
        0.0,
    )
    grad_t_b = np.where(
        inter[:, None],
        ((X[act] - a) * D - 2 * n_val[act][:, None] * u[None, :]) / D ** 2,
        0.0,
    )
    # d delta = -(1-t) da - t db - u dt
    # rho chain: d rho = (delta/rho) . d delta
    dhat = dl / rh[:, None]
    du_dt = dhat @ u
    drho_a = -(1 - tt)[:, None] * dhat - du_dt[:, None] * grad_t_a
    drho_b = -tt[:, None] * dhat - du_dt[:, None] * grad_t_b
    # phi chain
    with np.errstate(divide="ignore", invalid="ignore"):
        dphi_ddelta = np.where(
            rr[:, None] > 1e-18,
            (y1[:, None] * e2[None, :] - y2[:, None] * e1[None, :]) / rr[:, None],
            0.0,
        )
    u_dphi = dphi_ddelta @ u
    dphi_a = -(1 - tt)[:, None] * dphi_ddelta - u_dphi[:, None] * grad_t_a
    dphi_b = -tt[:, None] * dphi_ddelta - u_dphi[:, None] * grad_t_b
    # radius chain
    dr_dt = np.einsum("qm,mn,qn->q", dw_st, R, w_az)
    dr_dphi = np.einsum("qm,mn,qn->q", w_st, R, dw_az)
    da[act] = drho_a - (dr_dt[:, None] * grad_t_a + dr_dphi[:, None] * dphi_a)
    db[act] = drho_b - (dr_dt[:, None] * grad_t_b + dr_dphi[:, None] * dphi_b)
    return E, da, db, dr


def density(problem: ShapeOptProblem, x: Optional[np.ndarray] = None,
            X: Optional[np.ndarray] = None):
    """Voxel densities theta and the dense Jacobian d theta / d dofs."""
    if x is None:
        x = problem.pack()
    verts, vradii, eradii = problem.unpack(x)
    if X is None:
        X = problem.grid.centers()
    gamma = problem.grid.h
    n, m = len(verts), len(problem.edges)
    phis = []
    grads = []  # list of (dof-index-array, (q, k) jacobian of E)
    for k in range(n):
        E, dc, drr = _vertex_implicit(X, verts[k], vradii[k])
        phis.append(-E)
        grads.append((_vertex_dofs(problem, k), np.concatenate([dc, drr], axis=1)))
    for ke, (i, j) in enumerate(problem.edges):
        E, da, db, drr = _edge_implicit(
            X, verts[i], verts[j], problem.edge_frames[ke], eradii[ke]
        )
        phis.append(-E)
        grads.append(
            (_edge_dofs(problem, ke, i, j), np.concatenate([da, db, drr], axis=1))
        )
    F, mults = rvachev_union(np.stack(phis))
    theta, dH = heaviside(F, gamma)
    jac = np.zeros((len(X), problem.n_dofs))
    for k, (dof_idx, dE) in enumerate(grads):
        # phi_k = -E_k, so d theta/dE = -H' * mult_k
        contrib = (-dH * mults[k])[:, None] * dE
        np.add.at(jac, (slice(None), dof_idx), contrib)
    return theta, jac


def _vertex_dofs(problem, k):
    n = len(problem.vertices)
    pos = np.arange(3 * k, 3 * k + 3)
    rad = 3 * n + N_VERTEX_RADII * k + np.arange(N_VERTEX_RADII)
    return np.concatenate([pos, rad])


def _edge_dofs(problem, ke, i, j):
    n = len(problem.vertices)
    pa = np.arange(3 * i, 3 * i + 3)
    pb = np.arange(3 * j, 3 * j + 3)
    rad = 3 * n + N_VERTEX_RADII * n + N_EDGE_RADII * ke + np.arange(N_EDGE_RADII)
    return np.concatenate([pa, pb, rad])


# ---------------------------------------------------------------------------
# hexahedral FEM


def hex_stiffness(h: float, youngs: float, poisson: float) -> np.ndarray:
    """24x24 stiffness of an 8-node hexahedron of edge length h."""
    E, nu = youngs, poisson
    lam = E * nu / ((1 + nu) * (1 - 2 * nu))
    mu = E / (2 * (1 + nu))
    C = np.zeros((6, 6))
    C[:3, :3] = lam
    C[np.arange(3), np.arange(3)] = lam + 2 * mu
    C[3:, 3:] = np.eye(3) * mu
    # nodes of the unit cube in (x fastest? use binary order z, y, x)
    nodes = np.array(
        [[i, j, k] for k in (0, 1) for j in (0, 1) for i in (0, 1)], dtype=np.float64
    )
    gp = np.array([-1, 1]) / np.sqrt(3)
    K = np.zeros((24, 24))
    for gx in gp:
        for gy in gp:
            for gz in gp:
                xi = np.array([gx, gy, gz]) * 0.5 + 0.5  # in [0,1]
                dN = np.zeros((8, 3))
                for a_i, (i, j, k) in enumerate(nodes):
                    sx = xi[0] if i else 1 - xi[0]
                    sy = xi[1] if j else 1 - xi[1]
                    sz = xi[2] if k else 1 - xi[2]
                    dsx = 1.0 if i else -1.0
                    dsy = 1.0 if j else -1.0
                    dsz = 1.0 if k else -1.0
                    dN[a_i] = [dsx * sy * sz, sx * dsy * sz, sx * sy * dsz]
                dN /= h  # physical derivatives
                B = np.zeros((6, 24))
                for a_i in range(8):
                    bx, by, bz = dN[a_i]
                    B[0, 3 * a_i] = bx
                    B[1, 3 * a_i + 1] = by
                    B[2, 3 * a_i + 2] = bz
                    B[3, 3 * a_i] = by
                    B[3, 3 * a_i + 1] = bx
                    B[4, 3 * a_i + 1] = bz
                    B[4, 3 * a_i + 2] = by
                    B[5, 3 * a_i] = bz
                    B[5, 3 * a_i + 2] = bx
                K += B.T @ C @ B * (h ** 3 / 8.0)
    return K


def _grid_topology(grid: VoxelGrid):
    nx, ny, nz = grid.dims
    nnx, nny, nnz = nx + 1, ny + 1, nz + 1

    def nid(i, j, k):
        return (i * nny + j) * nnz + k

    cells = np.empty((grid.n_cells, 8), dtype=np.int64)
    c = 0
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                cells[c] = [
                    nid(i, j, k), nid(i + 1, j, k), nid(i, j + 1, k),
                    nid(i + 1, j + 1, k), nid(i, j, k + 1), nid(i + 1, j, k + 1),
                    nid(i, j + 1, k + 1), nid(i + 1, j + 1, k + 1),
                ]
                c += 1
    return cells, nnx * nny * nnz


class FemModel:
    def __init__(self, problem: ShapeOptProblem):
        self.problem = problem
        self.K0 = hex_stiffness(problem.grid.h, problem.youngs, problem.poisson)
        self.cells, self.n_nodes = _grid_topology(problem.grid)
        self.ndof = 3 * self.n_nodes
        dofs = np.empty((len(self.cells), 24), dtype=np.int64)
        for a_i in range(8):
            dofs[:, 3 * a_i : 3 * a_i + 3] = (
                3 * self.cells[:, a_i : a_i + 1] + np.arange(3)[None, :]
            )
        self.cell_dofs = dofs
        self.rows = np.repeat(dofs, 24, axis=1).ravel()
        self.cols = np.tile(dofs, (1, 24)).ravel()

    def stiffness(self, X: np.ndarray) -> sp.csr_matrix:
        scale = DENSITY_FLOOR + (1 - DENSITY_FLOOR) * X
        data = (scale[:, None, None] * self.K0[None, :, :]).ravel()
        K = sp.coo_matrix(
            (data, (self.rows, self.cols)), shape=(self.ndof, self.ndof)
        )
        return K.tocsr()

    def solve(self, X: np.ndarray, loads: np.ndarray, fixed: np.ndarray):
        K = self.stiffness(X)
        free = ~fixed
        Kff = K[free][:, free].tocsc()
        f = loads[free]
        if Kff.shape[0] <= 10_000:
            u_free = spla.splu(Kff).solve(f)
        else:
            M = sp.diags(1.0 / Kff.diagonal())
            u_free, info = spla.cg(Kff, f, M=M, rtol=1e-8, maxiter=20_000)
            if info != 0:
                raise RuntimeError(f"PCG failed to converge (info={info})")
        resid = np.linalg.norm(Kff @ u_free - f)
        if resid > 1e-6 * max(1.0, np.linalg.norm(f)):
            raise RuntimeError("equilibrium residual too large")
        u = np.zeros(self.ndof)
        u[free] = u_free
        return u

    def element_compliances(self, u: np.ndarray) -> np.ndarray:
        ue = u[self.cell_dofs]
        return np.einsum("ei,ij,ej->e", ue, self.K0, ue)


def solve_equilibrium(problem: ShapeOptProblem, X: np.ndarray,
                      model: Optional[FemModel] = None) -> np.ndarray:
    model = model or FemModel(problem)
    if not problem.fixed.any():
        raise ValueError("no fixed dofs: system is unconstrained")
    return model.solve(X, problem.loads, problem.fixed)


def total_energy_and_gradient(problem: ShapeOptProblem, x: np.ndarray,
                              model: Optional[FemModel] = None,
                              with_gradient: bool = True):
    model = model or FemModel(problem)
    theta, jac = density(problem, x)
    u = model.solve(theta, problem.loads, problem.fixed)
    compliance = 0.5 * float(u @ (problem.loads))
    vol_mean = float(theta.mean())
    over = vol_mean - problem.volume_fraction
    E_v = 0.5 * problem.volume_weight * over ** 2 if over > 0 else 0.0
    total = compliance + E_v
    if not with_gradient:
        return total, compliance, E_v, theta, u, None
    ce = model.element_compliances(u)
    dtheta = -0.5 * (1 - DENSITY_FLOOR) * ce
    if over > 0:
        dtheta = dtheta + problem.volume_weight * over / problem.grid.n_cells
    grad = jac.T @ dtheta
    return total, compliance, E_v, theta, u, grad


def compliance_gradient(problem: ShapeOptProblem, x: Optional[np.ndarray] = None,
                        model: Optional[FemModel] = None) -> np.ndarray:
    if x is None:
        x = problem.pack()
    return total_energy_and_gradient(problem, x, model)[5]


@dataclass
class ShapeOptTrace:
    iteration: int
    total: float
    compliance: float
    volume_penalty: float
    step: float


def gradient_descent(
    f: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    step0: float = 1.0,
    max_iterations: int = 100,
    min_step: float = 1e-8,
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> Tuple[np.ndarray, List[Tuple[int, float, float]]]:
    """Back-tracking line search: each step halves until f decreases."""
    x = x0.copy()
    fx = f(x)
    trace = [(0, fx, 0.0)]
    for it in range(1, max_iterations + 1):
        g = grad(x)
        gn = np.linalg.norm(g)
        if gn == 0:
            break
        step = step0
        while step >= min_step:
            cand = x - step * g
            if project is not None:
                cand = project(cand)
            fc = f(cand)
            if fc < fx:
                x, fx = cand, fc
                break
            step *= 0.5
        else:
            break
        trace.append((it, fx, step))
    return x, trace


def optimize_shape(
    problem: ShapeOptProblem,
    max_iterations: int = 30,
    step0: float = 0.1,
    min_step: float = 1e-8,
) -> Tuple[np.ndarray, List[ShapeOptTrace]]:
    """Gradient descent over packed skeleton DOFs with vertex positions
    clamped to the voxel domain."""
    model = FemModel(problem)
    lo, hi = problem.grid.bounds()

    def project(x):
        v, vr, er = problem.unpack(x)
        v = np.clip(v, lo, hi)
        vr = np.maximum(vr, 1e-3)
        er = np.maximum(er, 1e-3)
        return problem.pack(v, vr, er)

    x = project(problem.pack())
    total, comp, ev, _, _, g = total_energy_and_gradient(problem, x, model)
    trace = [ShapeOptTrace(0, total, comp, ev, 0.0)]
    for it in range(1, max_iterations + 1):
        gn = np.linalg.norm(g)
        if gn == 0:
            break
        step = step0 / max(gn, 1e-12)
        accepted = False
        while step >= min_step:
            cand = project(x - step * g)
            t_c, c_c, v_c, _, _, _ = total_energy_and_gradient(
                problem, cand, model, with_gradient=False
            )
            if t_c < total:
                x = cand
                total, comp, ev = t_c, c_c, v_c
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        trace.append(ShapeOptTrace(it, total, comp, ev, step))
        g = total_energy_and_gradient(problem, x, model)[5]
    return x, trace


# ---------------------------------------------------------------------------
# problem files
#
# Plain-text format, one directive per line ('#' starts a comment):
#   grid nx ny nz h [ox oy oz]
#   volume fraction [weight]
#   material youngs poisson
#   vertex x y z r          # initial radius, replicated over all samples
#   edge i j r              # endpoints index vertex lines in file order
#   fix xmin|xmax|ymin|ymax|zmin|zmax
#   load <face> fx fy fz    # total force, split evenly over face nodes

_FACES = ("xmin", "xmax", "ymin", "ymax", "zmin", "zmax")


def _face_nodes(grid: VoxelGrid, face: str) -> np.ndarray:
    nx, ny, nz = grid.dims
    nnx, nny, nnz = nx + 1, ny + 1, nz + 1
    I, J, K = np.meshgrid(
        np.arange(nnx), np.arange(nny), np.arange(nnz), indexing="ij"
    )
    axis, side = face[0], face[1:]
    idx = {"x": I, "y": J, "z": K}[axis]
    hi = {"x": nx, "y": ny, "z": nz}[axis]
    mask = idx == (0 if side == "min" else hi)
    return ((I * nny + J) * nnz + K)[mask].ravel()


def load_problem(path: str) -> ShapeOptProblem:
    grid = None
    volume_fraction, volume_weight = 0.2, 1e3
    youngs, poisson = 1.0, 0.3
    verts: List[List[float]] = []
    vradii: List[float] = []
    edges: List[Tuple[int, int]] = []
    eradii: List[float] = []
    fixes: List[str] = []
    loads: List[Tuple[str, float, float, float]] = []

    with open(path) as f:
        for ln, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            kind, args = tok[0], tok[1:]
            try:
                if kind == "grid":
                    dims = tuple(int(a) for a in args[:3])
                    h = float(args[3])
                    origin = tuple(float(a) for a in args[4:7]) or (0.0, 0.0, 0.0)
                    grid = VoxelGrid(dims, h, origin)
                elif kind == "volume":
                    volume_fraction = float(args[0])
                    if len(args) > 1:
                        volume_weight = float(args[1])
                elif kind == "material":
                    youngs, poisson = float(args[0]), float(args[1])
                elif kind == "vertex":
                    verts.append([float(a) for a in args[:3]])
                    vradii.append(float(args[3]))
                elif kind == "edge":
                    i, j = int(args[0]), int(args[1])
                    if not (0 <= i < len(verts) and 0 <= j < len(verts)):
                        raise ValueError("edge endpoint out of range")
                    edges.append((i, j))
                    eradii.append(float(args[2]))
                elif kind == "fix":
                    if args[0] not in _FACES:
                        raise ValueError(f"unknown face {args[0]!r}")
                    fixes.append(args[0])
                elif kind == "load":
                    if args[0] not in _FACES:
                        raise ValueError(f"unknown face {args[0]!r}")
                    loads.append((args[0], *(float(a) for a in args[1:4])))
                else:
                    raise ValueError(f"unknown directive {kind!r}")
            except (IndexError, ValueError) as exc:
                raise ValueError(f"{path}:{ln}: {exc}") from exc

    if grid is None:
        raise ValueError(f"{path}: missing 'grid' directive")
    if not verts:
        raise ValueError(f"{path}: at least one 'vertex' required")
    if not fixes:
        raise ValueError(f"{path}: at least one 'fix' required")
    if not loads:
        raise ValueError(f"{path}: at least one 'load' required")

    ndof = 3 * (grid.dims[0] + 1) * (grid.dims[1] + 1) * (grid.dims[2] + 1)
    fixed = np.zeros(ndof, dtype=bool)
    for face in fixes:
        nodes = _face_nodes(grid, face)
        fixed[np.repeat(3 * nodes, 3) + np.tile(np.arange(3), len(nodes))] = True
    force = np.zeros(ndof)
    for face, fx, fy, fz in loads:
        nodes = _face_nodes(grid, face)
        per = np.array([fx, fy, fz]) / len(nodes)
        for d in range(3):
            force[3 * nodes + d] += per[d]

    return ShapeOptProblem(
        grid,
        np.asarray(verts),
        edges,
        np.repeat(np.asarray(vradii)[:, None], N_VERTEX_RADII, axis=1),
        np.repeat(np.asarray(eradii)[:, None], N_EDGE_RADII, axis=1)
        if edges else np.zeros((0, N_EDGE_RADII)),
        force,
        fixed,
        volume_fraction=volume_fraction,
        volume_weight=volume_weight,
        youngs=youngs,
        poisson=poisson,
    )
