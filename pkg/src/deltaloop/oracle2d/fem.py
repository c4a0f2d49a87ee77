"""Conforming P1 discretization of the magnetic form with a line coupling.

The sesquilinear form is ``int conj(D u) . D v - beta int_loop conj(u) v``
with ``D = -i grad - A``. Degrees of freedom are complex. The line term is
integrated exactly over the loop edges of the mesh, and the volume term uses a
degree-5 rule; the flux singularity lies inside an element, away from every
quadrature point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from ..coefficients import ModelParams
from ..errors import DomainError
from ..geometry import LoopCurve
from ..spectral1d import Spectrum
from .mesh import MeshControl, MeshProblem, build_loop_mesh

GaugeGradient = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]

# seven-point degree-5 rule on the reference triangle (barycentric, weights sum to 1)
_A1, _B1 = 0.059715871789770, 0.470142064105115
_A2, _B2 = 0.797426985353087, 0.101286507323456
QUAD_POINTS = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
    [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2],
])
QUAD_WEIGHTS = np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3)
_REF_GRAD = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def vector_potential(params: ModelParams, x: np.ndarray, y: np.ndarray,
                     gauge: GaugeGradient | None = None) -> np.ndarray:
    """``(c0 / r^2 + B / 2) (-y, x)`` plus an optional gauge gradient, shape ``(..., 2)``."""
    f = params.c0 / (x * x + y * y) + 0.5 * params.B
    a = np.stack([-y * f, x * f], axis=-1)
    if gauge is not None:
        gx, gy = gauge(x, y)
        a = a + np.stack([gx, gy], axis=-1)
    return a


def assemble(mesh: MeshProblem, params: ModelParams, gauge: GaugeGradient | None = None):
    """Hermitian stiffness (form incl. line term) and mass, restricted to free nodes."""
    p = mesh.nodes[mesh.triangles]
    jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
    area = 0.5 * np.abs(jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0])
    grad = np.einsum("ak,ekl->eal", _REF_GRAD, np.linalg.inv(jac))
    xq = np.einsum("qa,eal->eql", QUAD_POINTS, p)
    pot = vector_potential(params, xq[..., 0], xq[..., 1], gauge)
    # D phi_b at each quadrature point: -i grad phi_b - A phi_b
    dphi = -1j * grad[:, None, :, :] - pot[:, :, None, :] * QUAD_POINTS[None, :, :, None]
    k_el = np.einsum("q,eqal,eqbl->eab", QUAD_WEIGHTS, dphi.conj(), dphi) * area[:, None, None]
    m_el = area[:, None, None] * (np.ones((3, 3)) + np.eye(3)) / 12.0
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_nodes
    K = sp.csr_matrix((k_el.ravel(), (rows, cols)), shape=(n, n))
    M = sp.csr_matrix((m_el.ravel(), (rows, cols)), shape=(n, n))
    beta = float(params.beta or 0.0)
    if beta:
        i0, i1 = mesh.loop_edges[:, 0], mesh.loop_edges[:, 1]
        le = np.hypot(*(mesh.nodes[i1] - mesh.nodes[i0]).T)
        er = np.concatenate([i0, i0, i1, i1])
        ec = np.concatenate([i0, i1, i0, i1])
        ev = np.concatenate([2 * le, le, le, 2 * le]) / 6.0
        K = K - beta * sp.csr_matrix((ev, (er, ec)), shape=(n, n))
    free = np.ones(n, dtype=bool)
    free[mesh.boundary] = False
    keep = np.nonzero(free)[0]
    return K[keep][:, keep].tocsc(), M[keep][:, keep].tocsc()


def default_shift(params: ModelParams, gamma_plus: float) -> float:
    """A target below the lowest eigenvalue for shift-invert."""
    beta = float(params.beta or 0.0)
    if beta:
        return -(0.5 * beta + gamma_plus) ** 2 - 1.0
    return -1.0


def mesh_eigenvalues(mesh: MeshProblem, params: ModelParams, n: int, shift: float,
                     gauge: GaugeGradient | None = None) -> np.ndarray:
    K, M = assemble(mesh, params, gauge)
    k = min(n + 2, K.shape[0] - 2)
    vals = eigsh(K, k=k, M=M, sigma=shift, which="LM", return_eigenvectors=False)
    return np.sort(vals.real)[:n]


@dataclass(frozen=True)
class MeshRun:
    """Eigenvalues on one mesh, for the refinement record."""

    n_nodes: int
    n_triangles: int
    eigenvalues: np.ndarray


def general_solve(curve: LoopCurve, params: ModelParams, n: int,
                  mesh_control: MeshControl | None = None,
                  gauge: GaugeGradient | None = None) -> Spectrum:
    """Lowest ``n`` eigenvalues of the full operator for an arbitrary loop.

    The mesh is solved, then refined uniformly once; the returned values are
    the second-order Richardson extrapolation and the error estimate is a
    third of the refinement change.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if curve.origin_clearance() <= 0:
        raise DomainError("the flux origin must lie inside the loop")
    control = (mesh_control or MeshControl()).resolved(curve, float(params.beta or 0.0), params.B)
    shift = default_shift(params, curve.gamma_plus)
    runs = []
    for ctl in (control, control.refined()):
        mesh = build_loop_mesh(curve, ctl, params)
        vals = mesh_eigenvalues(mesh, params, n, shift, gauge)
        runs.append(MeshRun(mesh.n_nodes, mesh.n_triangles, vals))
        meta_mesh = mesh.meta
    coarse, fine = runs[0].eigenvalues, runs[1].eigenvalues
    values = (4.0 * fine - coarse) / 3.0
    errors = np.abs(fine - coarse) / 3.0 + 1e-12 * np.maximum(1.0, np.abs(values))
    order = np.argsort(values)
    meta = {
        "coarse": coarse.tolist(), "fine": fine.tolist(),
        "nodes": [r.n_nodes for r in runs], "triangles": [r.n_triangles for r in runs],
        "mesh": meta_mesh, "shift": shift, "gauge": gauge is not None,
    }
    return Spectrum(values[order], errors[order], runs[1].n_nodes, "mesh", params.as_dict(),
                    meta=meta)


def smooth_gauge(amplitude: float = 0.5, scale: float = 1.0) -> GaugeGradient:
    """Gradient of ``chi = amplitude * sin(x / scale) * cos(y / scale)``."""
    def grad(x, y):
        sx, cx = np.sin(x / scale), np.cos(x / scale)
        sy, cy = np.sin(y / scale), np.cos(y / scale)
        return amplitude / scale * cx * cy, -amplitude / scale * sx * sy
    return grad


def gauge_shift_check(curve: LoopCurve, params: ModelParams, n: int,
                      mesh_control: MeshControl | None = None,
                      gauge: GaugeGradient | None = None) -> dict:
    """Compare spectra with and without a smooth gauge shift on identical meshes."""
    plain = general_solve(curve, params, n, mesh_control)
    shifted = general_solve(curve, params, n, mesh_control, gauge or smooth_gauge())
    diff = np.abs(plain.eigenvalues - shifted.eigenvalues)
    tol = plain.error_estimates + shifted.error_estimates
    return {
        "plain": plain.eigenvalues.tolist(), "shifted": shifted.eigenvalues.tolist(),
        "difference": diff.tolist(), "tolerance": tol.tolist(),
        "invariant": bool(np.all(diff <= tol)),
    }


def relative_gap(reference: float, value: float, beta: float) -> float:
    """``|value - reference| / |reference + beta^2/4|`` on the shifted scale."""
    ref = reference + 0.25 * beta * beta
    return abs(value - reference) / abs(ref) if ref else math.inf
