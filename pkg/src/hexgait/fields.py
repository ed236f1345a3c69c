"""Connection fields over shape space and their Helmholtz split.

For every contact pattern the 3x2 local connection is sampled on a uniform
grid over (alpha1, alpha2).  Component by component, the resulting planar
vector field splits into a curl-free part represented by a scalar potential
(fitted in the least-squares sense, which is the discrete Poisson problem
with no-flux boundaries) and a leftover whose discrete curl is the height
field measuring non-conservativity.  Displacement predictions from
potential differences are exact for the curl-free part; the height field
bounds what closed loops can still pick up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .connection import SolverError, SolverSettings, _solve_batch
from .model import ContactCatalog, HexapodParams, JointLimitError

COMPONENTS = ("x", "y", "theta")
_COMPONENT_ROW = {"x": 0, "y": 1, "theta": 2}


@dataclass(frozen=True)
class GridSpec:
    """Uniform square grid over [-amax, amax]^2; size must be odd so a
    center node exists for gauge fixing."""

    size: int = 51
    amax: float = 5.0 * math.pi / 16.0

    def __post_init__(self) -> None:
        if self.size < 11 or self.size % 2 == 0:
            raise ValueError("grid size must be odd and at least 11")
        if self.amax <= 0.0:
            raise ValueError("amax must be positive")

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.amax, self.amax, self.size)

    @property
    def spacing(self) -> float:
        return 2.0 * self.amax / (self.size - 1)


@dataclass(frozen=True)
class FieldGrid:
    """Sampled local connections: A[p, i, j] is the 3x2 connection at
    (axis[i], axis[j]) under catalog pattern p."""

    params: HexapodParams
    catalog: ContactCatalog
    spec: GridSpec
    A: np.ndarray          # (n_patterns, G, G, 3, 2)
    residuals: np.ndarray  # (n_patterns, G, G), worst solve residual per node

    @property
    def axis(self) -> np.ndarray:
        return self.spec.axis

    def component(self, pattern_index: int, component: str) -> np.ndarray:
        """One connection row as a (G, G, 2) vector field over shape space."""
        return self.A[pattern_index, :, :, _COMPONENT_ROW[component], :]


@dataclass(frozen=True)
class PotentialField:
    """Scalar potential of the curl-free part, gauged to 0 at the center node."""

    pattern_index: int
    component: str
    axis: np.ndarray
    values: np.ndarray

    def interpolate(self, points) -> np.ndarray:
        return interp_bilinear(self.axis, self.values, points)


@dataclass(frozen=True)
class HeightField:
    """Discrete curl of the non-gradient remainder of a connection row."""

    pattern_index: int
    component: str
    axis: np.ndarray
    values: np.ndarray


def sample_fields(
    params: HexapodParams,
    catalog: ContactCatalog,
    grid_spec: GridSpec | None = None,
    settings: SolverSettings | None = None,
) -> FieldGrid:
    """Solve the force balance at every (grid node, pattern, unit shape
    velocity) and assemble the connection fields.

    All solves run as one batched Newton iteration; any node that misses
    the residual tolerance aborts with its (pattern, node) context.
    """
    grid_spec = grid_spec or GridSpec()
    settings = settings or SolverSettings()
    if grid_spec.amax > params.joint_limit + 1e-12:
        raise JointLimitError("grid extends beyond the joint limit")

    axis = grid_spec.axis
    g = grid_spec.size
    n_pat = len(catalog)
    a1, a2 = np.meshgrid(axis, axis, indexing="ij")
    nodes = np.column_stack([a1.ravel(), a2.ravel()])  # (G*G, 2)
    n_nodes = nodes.shape[0]

    # batch layout: (pattern, column, node)
    shapes = np.tile(nodes, (n_pat * 2, 1))
    dshapes = np.tile(np.repeat(np.eye(2), n_nodes, axis=0), (n_pat, 1))
    stance = np.repeat(catalog.stance_matrix(), 2 * n_nodes, axis=0)

    xi, norms, iters = _solve_batch(params, shapes, dshapes, stance, settings)
    if norms.max() > settings.residual_tol:
        worst = int(np.argmax(norms))
        p, rem = divmod(worst, 2 * n_nodes)
        col, node = divmod(rem, n_nodes)
        i, j = divmod(node, g)
        raise SolverError(
            f"field sampling failed at pattern {p} ({catalog[p]}), node "
            f"({axis[i]:.4f}, {axis[j]:.4f}), column {col}: residual "
            f"{norms[worst]:.3e} after {iters} iterations",
            residual=float(norms[worst]),
            iterations=iters,
        )

    xi = xi.reshape(n_pat, 2, g, g, 3)
    a_field = np.moveaxis(xi, 1, -1)  # (n_pat, G, G, 3, 2)
    residuals = norms.reshape(n_pat, 2, g, g).max(axis=1)
    return FieldGrid(
        params=params,
        catalog=catalog,
        spec=grid_spec,
        A=a_field,
        residuals=residuals,
    )


def _diff1(g: int, h: float) -> sp.csr_matrix:
    """1D first-derivative matrix: central interior, second-order one-sided
    at the boundary (exact for quadratics, so quadratic potentials are
    recovered to solver precision)."""
    d = sp.lil_matrix((g, g))
    for i in range(1, g - 1):
        d[i, i - 1] = -0.5 / h
        d[i, i + 1] = 0.5 / h
    d[0, 0] = -1.5 / h
    d[0, 1] = 2.0 / h
    d[0, 2] = -0.5 / h
    d[g - 1, g - 1] = 1.5 / h
    d[g - 1, g - 2] = -2.0 / h
    d[g - 1, g - 3] = 0.5 / h
    return d.tocsr()


_OPERATOR_CACHE: dict[tuple[int, float], tuple] = {}


def _gradient_ops(g: int, h: float):
    """Sparse d/dalpha1, d/dalpha2 on row-major flattened (G, G) grids,
    plus a factorized KKT system for the gauge-fixed least-squares fit."""
    key = (g, h)
    cached = _OPERATOR_CACHE.get(key)
    if cached is not None:
        return cached
    d1 = _diff1(g, h)
    eye = sp.identity(g, format="csr")
    dx = sp.kron(d1, eye, format="csr")  # derivative along alpha1 (axis 0)
    dy = sp.kron(eye, d1, format="csr")  # derivative along alpha2 (axis 1)
    stacked = sp.vstack([dx, dy], format="csr")
    normal = (stacked.T @ stacked).tocsc()
    center = (g // 2) * g + (g // 2)
    e = sp.csc_matrix(
        (np.ones(1), (np.array([center]), np.array([0]))), shape=(g * g, 1)
    )
    kkt = sp.bmat([[normal, e], [e.T, None]], format="csc")
    lu = spla.splu(kkt)
    ops = (dx, dy, stacked, lu)
    _OPERATOR_CACHE[key] = ops
    return ops


def decompose_vector_field(
    axis: np.ndarray, field: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Split a (G, G, 2) vector field into potential and height parts.

    Returns (P, H): P minimizes ||grad P - field||_2 subject to P = 0 at the
    center node; H is the discrete curl of the remainder field - grad P.
    """
    g = len(axis)
    h = float(axis[1] - axis[0])
    dx, dy, stacked, lu = _gradient_ops(g, h)
    vec = np.concatenate([field[..., 0].ravel(), field[..., 1].ravel()])
    rhs = np.concatenate([stacked.T @ vec, [0.0]])
    pot = lu.solve(rhs)[:-1]
    resid = vec - stacked @ pot
    r1 = resid[: g * g]
    r2 = resid[g * g :]
    height = (dx @ r2 - dy @ r1).reshape(g, g)
    return pot.reshape(g, g), height


def helmholtz_decompose(
    grid: FieldGrid, pattern_index: int, component: str
) -> tuple[PotentialField, HeightField]:
    """Decompose one connection row of one pattern."""
    pot, height = decompose_vector_field(
        grid.axis, grid.component(pattern_index, component)
    )
    return (
        PotentialField(pattern_index, component, grid.axis, pot),
        HeightField(pattern_index, component, grid.axis, height),
    )


@dataclass(frozen=True)
class FieldSet:
    """All decompositions of a sampled FieldGrid.

    ``potentials`` and ``heights`` have shape (n_patterns, 3, G, G) with
    the middle axis ordered like COMPONENTS.
    """

    grid: FieldGrid
    potentials: np.ndarray
    heights: np.ndarray

    def potential_field(self, pattern_index: int, component: str) -> PotentialField:
        row = _COMPONENT_ROW[component]
        return PotentialField(
            pattern_index, component, self.grid.axis,
            self.potentials[pattern_index, row],
        )

    def height_field(self, pattern_index: int, component: str) -> HeightField:
        row = _COMPONENT_ROW[component]
        return HeightField(
            pattern_index, component, self.grid.axis,
            self.heights[pattern_index, row],
        )


def decompose_all(grid: FieldGrid) -> FieldSet:
    n_pat = len(grid.catalog)
    g = grid.spec.size
    pots = np.empty((n_pat, 3, g, g))
    heights = np.empty((n_pat, 3, g, g))
    for p in range(n_pat):
        for row, comp in enumerate(COMPONENTS):
            pots[p, row], heights[p, row] = decompose_vector_field(
                grid.axis, grid.component(p, comp)
            )
    return FieldSet(grid=grid, potentials=pots, heights=heights)


def interp_bilinear(axis: np.ndarray, values: np.ndarray, points) -> np.ndarray:
    """Bilinear interpolation of a (G, G) node array at (..., 2) points.

    Points may sit on the boundary; anything further than a tiny tolerance
    outside the grid raises ValueError.
    """
    pts = np.asarray(points, dtype=float)
    h = float(axis[1] - axis[0])
    lo, hi = float(axis[0]), float(axis[-1])
    tol = 1e-9 * h
    if np.any(pts < lo - tol) or np.any(pts > hi + tol):
        raise ValueError("interpolation point outside the sampled grid")
    x = np.clip((pts[..., 0] - lo) / h, 0.0, len(axis) - 1.0)
    y = np.clip((pts[..., 1] - lo) / h, 0.0, len(axis) - 1.0)
    i = np.minimum(x.astype(int), len(axis) - 2)
    j = np.minimum(y.astype(int), len(axis) - 2)
    fx = x - i
    fy = y - j
    return (
        (1 - fx) * (1 - fy) * values[i, j]
        + fx * (1 - fy) * values[i + 1, j]
        + (1 - fx) * fy * values[i, j + 1]
        + fx * fy * values[i + 1, j + 1]
    )


@dataclass(frozen=True)
class ConservativityRow:
    """Size comparison between the non-conservative and conservative parts
    of one connection row under one pattern.

    ``ratio`` compares displacement scales: RMS height times cell area
    against RMS potential gradient times cell size.  ``circulation`` is the
    full-loop line integral of the raw field around the sampled circle and
    ``loop_potential_span`` the max-min of the potential on that circle.
    """

    pattern_index: int
    component: str
    rms_height: float
    rms_gradient: float
    ratio: float
    circulation: float
    loop_potential_span: float


def loop_circulation(
    axis: np.ndarray,
    field: np.ndarray,
    radius: float,
    segments: int = 720,
) -> float:
    """Line integral of a (G, G, 2) field around a centered circle,
    midpoint rule on ``segments`` chords."""
    tau = np.linspace(0.0, 2.0 * np.pi, segments + 1)
    pts = np.column_stack([radius * np.sin(tau), radius * np.cos(tau)])
    mids = 0.5 * (pts[:-1] + pts[1:])
    deltas = np.diff(pts, axis=0)
    f1 = interp_bilinear(axis, field[..., 0], mids)
    f2 = interp_bilinear(axis, field[..., 1], mids)
    return float((f1 * deltas[:, 0] + f2 * deltas[:, 1]).sum())


def conservativity_report(
    fields: FieldSet,
    loop_radius: float | None = None,
    segments: int = 720,
) -> list[ConservativityRow]:
    """Per (pattern, component) conservativity diagnostics."""
    grid = fields.grid
    axis = grid.axis
    h = grid.spec.spacing
    radius = grid.spec.amax if loop_radius is None else loop_radius
    tau = np.linspace(0.0, 2.0 * np.pi, segments + 1)[:-1]
    circle = np.column_stack([radius * np.sin(tau), radius * np.cos(tau)])

    dx, dy, _, _ = _gradient_ops(grid.spec.size, h)
    rows = []
    for p in range(len(grid.catalog)):
        for comp in COMPONENTS:
            r = _COMPONENT_ROW[comp]
            pot = fields.potentials[p, r]
            height = fields.heights[p, r]
            gx = (dx @ pot.ravel()).reshape(pot.shape)
            gy = (dy @ pot.ravel()).reshape(pot.shape)
            rms_grad = float(np.sqrt((gx**2 + gy**2).mean()))
            rms_h = float(np.sqrt((height**2).mean()))
            num = rms_h * h * h
            den = rms_grad * h
            if den == 0.0:
                ratio = 0.0 if num == 0.0 else math.inf
            else:
                ratio = num / den
            circ = loop_circulation(axis, grid.component(p, comp), radius, segments)
            pot_on_loop = interp_bilinear(axis, pot, circle)
            rows.append(
                ConservativityRow(
                    pattern_index=p,
                    component=comp,
                    rms_height=rms_h,
                    rms_gradient=rms_grad,
                    ratio=ratio,
                    circulation=circ,
                    loop_potential_span=float(pot_on_loop.max() - pot_on_loop.min()),
                )
            )
    return rows
