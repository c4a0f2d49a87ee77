"""Triangulations of a truncated plane region that resolve the loop.

The mesh is structured: a graded tubular band around the loop, rings obtained
by radially scaling the inner band edge towards the flux origin, and rings
pushed radially outwards from the outer band edge up to a Dirichlet boundary.
The innermost ring is closed by a fan around a hub node placed off the origin,
so the flux singularity sits strictly inside an element.

Plain-text format (``write_mesh``/``read_mesh``)::

    # deltaloop mesh v1
    nodes <N>
    <x> <y>                 (N lines)
    triangles <T>
    <i> <j> <k>             (T lines, 0-based, counter-clockwise)
    loop_edges <E>
    <i> <j>                 (E lines, consecutive loop vertices)
    boundary <D>
    <i>                     (D lines, Dirichlet nodes)

Blank lines and lines starting with ``#`` are ignored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..coefficients import ModelParams
from ..errors import MeshError
from ..geometry import LoopCurve

VERTEX_TOL = 1e-12
HUB_OFFSET = (0.3, 0.17)


@dataclass(frozen=True)
class MeshControl:
    """Resolution knobs; ``None`` entries are derived from the curve and coupling."""

    n_s: int | None = None
    n_band: int = 121
    band_width: float | None = None
    grading: float = 5.0
    n_inner: int | None = None
    n_outer: int | None = None
    far_distance: float | None = None
    order: int = 1

    def __post_init__(self):
        if self.n_band < 3 or self.n_band % 2 == 0:
            raise MeshError("n_band must be odd and at least 3 (the loop is the middle ring)")
        if self.order != 1:
            raise MeshError("only first-order elements are implemented")
        if self.n_s is not None and self.n_s < 16:
            raise MeshError("n_s must be at least 16")

    def refined(self) -> "MeshControl":
        """Uniform refinement: every family of rings and segments is halved in spacing.

        Only meaningful on a resolved control, so that derived counts double too.
        """
        if None in (self.n_s, self.n_inner, self.n_outer):
            raise MeshError("refine a resolved control (see MeshControl.resolved)")
        return replace(self, n_s=2 * self.n_s, n_band=2 * self.n_band - 1,
                       n_inner=2 * self.n_inner, n_outer=2 * self.n_outer)

    def resolved(self, curve: LoopCurve, beta: float, B: float) -> "MeshControl":
        n_s = self.n_s or 2 * max(32, int(math.ceil(32.0 * curve.length)))
        clearance = curve.origin_clearance()
        width = self.band_width or 0.9 * min(curve.halfwidth, clearance)
        if not 0 < width < min(curve.halfwidth, clearance):
            raise MeshError(f"band width {width} must stay below the half-width and origin clearance")
        spacing = 2.0 * width * self.grading / math.tanh(self.grading) / (self.n_band - 1)
        n_inner = self.n_inner or max(8, int(math.ceil((clearance - width) / spacing)))
        if self.far_distance is not None:
            far = self.far_distance
        else:
            # bound states below -beta^2/4 decay like exp(-beta d / 2); without
            # coupling the magnetic confinement sets the scale instead
            if beta > 0:
                far = max(1.0, 40.0 / beta)
            else:
                far = max(1.0, 2.0 * math.sqrt(25.0 + abs(B)) / abs(B) - clearance if B else 1.0)
        n_outer = self.n_outer or max(8, int(math.ceil(far / (2.0 * spacing))))
        return replace(self, n_s=n_s, band_width=width, n_inner=n_inner, n_outer=n_outer,
                       far_distance=far)


@dataclass(frozen=True, eq=False)
class MeshProblem:
    """Triangulation with the loop as a chain of element edges."""

    nodes: np.ndarray
    triangles: np.ndarray
    loop_edges: np.ndarray
    boundary: np.ndarray
    params: ModelParams | None = None
    order: int = 1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        tris = np.asarray(self.triangles, dtype=np.int64)
        edges = np.asarray(self.loop_edges, dtype=np.int64).reshape(-1, 2)
        bnd = np.asarray(self.boundary, dtype=np.int64).ravel()
        for name, arr in (("nodes", nodes), ("triangles", tris), ("loop_edges", edges)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        bnd.setflags(write=False)
        object.__setattr__(self, "boundary", bnd)
        self.validate()

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def origin_element(self) -> int:
        """Index of the element containing the origin in its interior."""
        p = self.nodes[self.triangles]
        area2 = 2.0 * self.signed_areas()
        # barycentric coordinates of the origin
        l1 = (p[:, 1, 0] * p[:, 2, 1] - p[:, 2, 0] * p[:, 1, 1]) / area2
        l2 = (p[:, 2, 0] * p[:, 0, 1] - p[:, 0, 0] * p[:, 2, 1]) / area2
        l3 = 1.0 - l1 - l2
        bary = np.stack([l1, l2, l3], axis=1)
        inside = np.nonzero(np.all(bary > VERTEX_TOL, axis=1))[0]
        if inside.size != 1:
            raise MeshError("the origin must lie strictly inside exactly one element")
        return int(inside[0])

    def validate(self) -> None:
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 2:
            raise MeshError("nodes must have shape (N, 2)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError("triangles must have shape (T, 3)")
        if self.triangles.min() < 0 or self.triangles.max() >= self.n_nodes:
            raise MeshError("triangle index out of range")
        if np.any(self.signed_areas() <= 0):
            raise MeshError("triangles must be non-degenerate and counter-clockwise")
        radius = np.hypot(self.nodes[:, 0], self.nodes[:, 1])
        if np.any(radius <= VERTEX_TOL * max(1.0, radius.max())):
            raise MeshError("a mesh vertex sits on the flux origin")
        self.origin_element()
        if self.loop_edges.size == 0:
            raise MeshError("no loop edges")
        t = self.triangles
        tri_keys = _edge_keys(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), self.n_nodes)
        missing = int(np.count_nonzero(~np.isin(_edge_keys(self.loop_edges, self.n_nodes), tri_keys)))
        if missing:
            raise MeshError(f"{missing} loop edges are not element edges (mesh does not conform)")

    def loop_length(self) -> float:
        d = self.nodes[self.loop_edges[:, 1]] - self.nodes[self.loop_edges[:, 0]]
        return float(np.sum(np.hypot(d[:, 0], d[:, 1])))


def _edge_keys(edges: np.ndarray, n: int) -> np.ndarray:
    return np.min(edges, axis=1) * n + np.max(edges, axis=1)


def _star_check(ring: np.ndarray, what: str) -> None:
    cross = ring[:, 0] * np.roll(ring[:, 1], -1) - ring[:, 1] * np.roll(ring[:, 0], -1)
    if np.any(cross <= 0):
        raise MeshError(f"{what} is not star-shaped about the origin; radial rings would fold")


def band_offsets(control: MeshControl) -> np.ndarray:
    """Normal offsets of the band rings, outermost first (``u`` decreasing)."""
    xi = np.linspace(1.0, -1.0, control.n_band)
    u = control.band_width * np.sinh(control.grading * xi) / math.sinh(control.grading)
    u[control.n_band // 2] = 0.0
    return u


def build_loop_mesh(curve: LoopCurve, control: MeshControl | None = None,
                    params: ModelParams | None = None) -> MeshProblem:
    """Structured mesh around ``curve`` (origin inside, curve star-shaped band edges)."""
    control = control or MeshControl()
    beta = float(params.beta or 0.0) if params else 0.0
    B = params.B if params else 1.0
    ctl = control.resolved(curve, beta, B)
    ns = ctl.n_s
    s = np.arange(ns) * (curve.length / ns)
    u = band_offsets(ctl)  # inward edge first, loop in the middle
    base = curve.position(s)
    d = curve.tangent(s)
    normal = np.stack([-d[:, 1], d[:, 0]], axis=1)  # inward for a counter-clockwise loop
    inner_edge = base + u[0] * normal
    outer_edge = base + u[-1] * normal
    _star_check(inner_edge, "inner band edge")
    _star_check(outer_edge, "outer band edge")
    rings = []
    for t in np.linspace(0.0, 1.0, ctl.n_inner + 1)[1:-1]:
        rings.append(t * inner_edge)
    for uj in u:
        rings.append(base + uj * normal)
    out_dir = outer_edge / np.hypot(outer_edge[:, 0], outer_edge[:, 1])[:, None]
    for t in np.linspace(0.0, 1.0, ctl.n_outer + 1)[1:]:
        rings.append(outer_edge + t * ctl.far_distance * out_dir)
    loop_ring = (ctl.n_inner - 1) + ctl.n_band // 2

    rho1 = float(np.min(np.hypot(rings[0][:, 0], rings[0][:, 1])))
    hub = np.array(HUB_OFFSET) * rho1
    nodes = np.vstack([hub[None, :]] + rings)
    nr = len(rings)

    def idx(j, i):
        return 1 + j * ns + (i % ns)

    i = np.arange(ns)
    tris = [np.stack([np.zeros(ns, dtype=np.int64), idx(0, i), idx(0, i + 1)], axis=1)]
    for j in range(nr - 1):
        a, b, c, d = idx(j, i), idx(j, i + 1), idx(j + 1, i + 1), idx(j + 1, i)
        even = (i + j) % 2 == 0
        t1 = np.where(even[:, None], np.stack([a, c, b], 1), np.stack([a, d, b], 1))
        t2 = np.where(even[:, None], np.stack([a, d, c], 1), np.stack([b, d, c], 1))
        tris += [t1, t2]
    triangles = np.vstack(tris)
    loop_edges = np.stack([idx(loop_ring, i), idx(loop_ring, i + 1)], axis=1)
    boundary = idx(nr - 1, i)
    meta = {"n_s": ns, "n_band": ctl.n_band, "n_inner": ctl.n_inner, "n_outer": ctl.n_outer,
            "band_width": ctl.band_width, "far_distance": ctl.far_distance,
            "grading": ctl.grading, "curve": curve.name}
    return MeshProblem(nodes, triangles, loop_edges, boundary, params, 1, meta)


def write_mesh(mesh: MeshProblem, path: str | Path) -> Path:
    path = Path(path)
    lines = ["# deltaloop mesh v1", f"nodes {mesh.n_nodes}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.nodes.tolist()]
    lines.append(f"triangles {mesh.n_triangles}")
    lines += [f"{a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    lines.append(f"loop_edges {mesh.loop_edges.shape[0]}")
    lines += [f"{a} {b}" for a, b in mesh.loop_edges.tolist()]
    lines.append(f"boundary {mesh.boundary.size}")
    lines += [str(k) for k in mesh.boundary.tolist()]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_mesh(path: str | Path, params: ModelParams | None = None) -> MeshProblem:
    rows = [ln.strip() for ln in Path(path).read_text().splitlines()]
    rows = [ln for ln in rows if ln and not ln.startswith("#")]
    sections: dict[str, list[list[str]]] = {}
    k = 0
    while k < len(rows):
        head = rows[k].split()
        if len(head) != 2 or head[0] not in ("nodes", "triangles", "loop_edges", "boundary"):
            raise MeshError(f"unexpected line in mesh file: {rows[k]!r}")
        count = int(head[1])
        sections[head[0]] = [r.split() for r in rows[k + 1:k + 1 + count]]
        if len(sections[head[0]]) != count:
            raise MeshError(f"section {head[0]} is truncated")
        k += 1 + count
    missing = {"nodes", "triangles", "loop_edges", "boundary"} - sections.keys()
    if missing:
        raise MeshError(f"mesh file lacks sections: {sorted(missing)}")
    return MeshProblem(
        np.array(sections["nodes"], dtype=float).reshape(-1, 2),
        np.array(sections["triangles"], dtype=np.int64).reshape(-1, 3),
        np.array(sections["loop_edges"], dtype=np.int64).reshape(-1, 2),
        np.array(sections["boundary"], dtype=np.int64).ravel(),
        params,
    )
