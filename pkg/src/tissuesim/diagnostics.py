"""Analysis quantities over recorded states.

Everything here is pure post-processing: the incompressible-limit study
hinges on a handful of integral quantities (time-weighted energy of
v = n^(gamma+1), the excess measure of {n >= 1+delta}, the segregation
product |1-n| v, and the complementarity residual |v (lap v + R)|) plus a
few solver-verification checks (entropy dissipation, the porous-medium
time-monotonicity gap, bound checks).

Quadratures in time use the trapezoid rule over snapshot times; energy
windows that start between snapshots interpolate the integrand linearly at
the window edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Field, Grid, divergence, face_gradient
from .model import DerivedConstants, ModelParams
from .stepper import State


def grad_squared_integral(f: Field) -> float:
    """Integral of |grad f|^2 with face gradients, one cell volume per face."""
    total = 0.0
    vol = f.grid.cell_volume
    for g in face_gradient(f):
        total += float(np.sum(g * g)) * vol
    return total


def cellwise_grad_squared(f: Field) -> np.ndarray:
    """|grad f|^2 averaged onto cells; boundary faces contribute zero (no-flux)."""
    grid = f.grid
    out = np.zeros(grid.shape)
    grads = face_gradient(f)
    if grid.dim == 1:
        g2 = grads[0] ** 2
        out[:-1] += 0.5 * g2
        out[1:] += 0.5 * g2
        return out
    gx2, gy2 = grads[0] ** 2, grads[1] ** 2
    out[:-1, :] += 0.5 * gx2
    out[1:, :] += 0.5 * gx2
    out[:, :-1] += 0.5 * gy2
    out[:, 1:] += 0.5 * gy2
    return out


@dataclass(frozen=True)
class RunHistory:
    """Snapshots of one run plus the metadata diagnostics need."""

    grid: Grid
    gamma: float
    snapshots: tuple[State, ...]
    snapshot_dts: tuple[float, ...]     # dt of the step landing on each snapshot
    reaction_free: bool = False
    params: ModelParams | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])


@dataclass(frozen=True)
class LedgerRow:
    """Per-snapshot record of every quantity the analysis controls."""

    t: float
    mass: float
    n_min: float
    n_max: float
    c_min: float
    c_max: float
    d_min: float
    d_max: float
    v_sq: float            # integral of v^2
    grad_v_sq: float       # integral of |grad v|^2
    t_v_sq: float          # t-weighted energy increment t * integral v^2
    t_grad_v_sq: float     # t * integral |grad v|^2
    entropy_rate: float    # integral |grad n^((gamma+1)/2)|^2
    excess: float          # measure of {n >= 1 + delta}
    segregation: float     # integral |1 - n| v
    comp_resid: float      # integral |v (lap v + R)| in product form
    comp_t2: float         # t^2-weighted complementarity residual
    dt_used: float
    newton_iters: int
    clamped_cells: int
    cutoff_activations: int


@dataclass
class EnergyLedger:
    rows: list[LedgerRow] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def finite_problems(self) -> list[str]:
        out = []
        for i, row in enumerate(self.rows):
            for name in ("mass", "v_sq", "grad_v_sq", "entropy_rate", "excess",
                         "segregation", "comp_resid"):
                val = getattr(row, name)
                if not math.isfinite(val):
                    out.append(f"ledger row {i}: {name} is {val}")
        return out


def make_ledger_row(
    state: State,
    params: ModelParams,
    delta: float,
    dt_used: float,
    newton_iters: int = 0,
    clamped_cells: int = 0,
    cutoff_activations: int = 0,
) -> LedgerRow:
    v = state.v
    v_sq = float(np.sum(v.values**2)) * state.grid.cell_volume
    gv_sq = grad_squared_integral(v)
    half_power = state.n.with_values(
        np.maximum(state.n.values, 0.0) ** ((state.gamma + 1.0) / 2.0)
    )
    comp = complementarity_residual(state, params)
    return LedgerRow(
        t=state.t,
        mass=float(np.sum(state.n.values)) * state.grid.cell_volume,
        n_min=state.n.min(),
        n_max=state.n.max(),
        c_min=state.c.min(),
        c_max=state.c.max(),
        d_min=state.d.min(),
        d_max=state.d.max(),
        v_sq=v_sq,
        grad_v_sq=gv_sq,
        t_v_sq=state.t * v_sq,
        t_grad_v_sq=state.t * gv_sq,
        entropy_rate=grad_squared_integral(half_power),
        excess=excess_measure(state, delta),
        segregation=segregation_product(state),
        comp_resid=comp,
        comp_t2=state.t**2 * comp,
        dt_used=dt_used,
        newton_iters=newton_iters,
        clamped_cells=clamped_cells,
        cutoff_activations=cutoff_activations,
    )


def _windowed_trapezoid(times: np.ndarray, values: np.ndarray, lo: float, hi: float) -> float:
    """Trapezoid integral of a sampled function over [lo, hi].

    The left edge interpolates linearly when lo falls between samples.
    """
    mask = (times >= lo - 1e-14) & (times <= hi + 1e-14)
    ts = list(times[mask])
    vs = list(values[mask])
    if ts and ts[0] > lo + 1e-14:
        k = int(np.searchsorted(times, lo))
        if k > 0:
            t0, t1 = times[k - 1], times[k]
            w = (lo - t0) / (t1 - t0)
            ts.insert(0, lo)
            vs.insert(0, (1.0 - w) * values[k - 1] + w * values[k])
    if len(ts) < 2:
        raise ValueError("need at least 2 snapshots inside the time window")
    return float(np.trapezoid(np.asarray(vs), np.asarray(ts)))


def weighted_energy(history: RunHistory, tau: float) -> float:
    """Time-quadrature of t * (integral v^2 + integral |grad v|^2) over [tau, T].

    This is the quantity whose uniform-in-gamma boundedness drives the
    stiff-pressure limit; it must stay O(1) along a gamma sweep.
    """
    times = history.times
    if len(times) < 2:
        raise ValueError("need at least 2 snapshots")
    t_end = float(times[-1])
    if not (0.0 <= tau < t_end):
        raise ValueError(f"tau must lie in [0, T), got {tau} with T = {t_end}")
    integrand = []
    for s in history.snapshots:
        v = s.v
        a = float(np.sum(v.values**2)) * s.grid.cell_volume
        b = grad_squared_integral(v)
        integrand.append(s.t * (a + b))
    return _windowed_trapezoid(times, np.array(integrand), tau, t_end)


def complementarity_residual(state: State, params: ModelParams) -> float:
    """Integral of |div(v_face grad v) - |grad v|^2 + v R| in product form.

    The product form div(v grad v) - |grad v|^2 is how v lap v is defined in
    the limit problem; discretely it is also the best-behaved form near the
    front.  Vanishes identically when v does.
    """
    grid = state.grid
    v = state.v
    grads = face_gradient(v)
    if grid.dim == 1:
        v_face = (0.5 * (v.values[:-1] + v.values[1:]),)
    else:
        v_face = (
            0.5 * (v.values[:-1, :] + v.values[1:, :]),
            0.5 * (v.values[:, :-1] + v.values[:, 1:]),
        )
    div_term = divergence(grid, tuple(vf * g for vf, g in zip(v_face, grads)))
    grad_sq = cellwise_grad_squared(v)
    g = np.asarray(params.rates.G(state.d.values), dtype=float)
    reaction = g * state.n.values - params.D * state.c.values * state.n.values
    cellwise = div_term - grad_sq + v.values * reaction
    return float(np.sum(np.abs(cellwise))) * grid.cell_volume


def excess_measure(state: State, delta: float) -> float:
    """Total volume of cells where n >= 1 + delta."""
    if not (delta > 0.0):
        raise ValueError(f"delta must be positive, got {delta}")
    return float(np.count_nonzero(state.n.values >= 1.0 + delta)) * state.grid.cell_volume


def segregation_product(state: State) -> float:
    """Integral of |1 - n| v: must vanish in the stiff limit."""
    v = state.v.values
    return float(np.sum(np.abs(1.0 - state.n.values) * v)) * state.grid.cell_volume


def entropy_dissipation(history: RunHistory) -> float:
    """Time-quadrature of integral |grad n^((gamma+1)/2)|^2 over the whole run."""
    times = history.times
    if len(times) < 2:
        raise ValueError("need at least 2 snapshots")
    vals = []
    for s in history.snapshots:
        half_power = s.n.with_values(np.maximum(s.n.values, 0.0) ** ((s.gamma + 1.0) / 2.0))
        vals.append(grad_squared_integral(half_power))
    return float(np.trapezoid(np.asarray(vals), times))


def aronson_benilan_gap(history: RunHistory) -> float:
    """Min over cells and snapshot pairs of (dn/dt + n / (gamma t)).

    Only meaningful for reaction-free runs (the pure porous medium equation);
    nonnegative there up to discretization error.  Early snapshots with
    t < 10 * dt are excluded to keep the 1/t weight from amplifying startup
    error.
    """
    if not history.reaction_free:
        raise ValueError("the porous-medium monotonicity gap requires a reaction-free run")
    gamma = history.gamma
    gap = math.inf
    snaps = history.snapshots
    for k in range(len(snaps) - 1):
        s0, s1 = snaps[k], snaps[k + 1]
        dt_here = history.snapshot_dts[min(k + 1, len(history.snapshot_dts) - 1)]
        if s0.t <= 0.0 or s0.t < 10.0 * dt_here:
            continue
        dt_pair = s1.t - s0.t
        if dt_pair <= 0.0:
            continue
        rate = (s1.n.values - s0.n.values) / dt_pair
        bound = s0.n.values / (gamma * s0.t)
        gap = min(gap, float(np.min(rate + bound)))
    return gap


def free_boundary(state: State, threshold: float, axis: int = 0):
    """Linear-interpolated crossings of v = threshold.

    1D: sorted array of crossing coordinates.  2D: list of
    (axis, line_index, coordinate) tuples, scanning along both axes.
    """
    if not (threshold > 0.0):
        raise ValueError(f"threshold must be positive, got {threshold}")
    grid = state.grid
    v = state.v.values
    if grid.dim == 1:
        return _line_crossings(v, grid.centers(0), threshold)
    out = []
    xs, ys = grid.centers(0), grid.centers(1)
    for j in range(grid.cells[1]):
        for pos in _line_crossings(v[:, j], xs, threshold):
            out.append((0, j, pos))
    for i in range(grid.cells[0]):
        for pos in _line_crossings(v[i, :], ys, threshold):
            out.append((1, i, pos))
    return out


def _line_crossings(vals: np.ndarray, coords: np.ndarray, threshold: float) -> np.ndarray:
    s = vals - threshold
    crossings = []
    for i in range(len(vals) - 1):
        if s[i] == 0.0:
            crossings.append(float(coords[i]))
        elif s[i] * s[i + 1] < 0.0:
            w = s[i] / (s[i] - s[i + 1])
            crossings.append(float(coords[i] + w * (coords[i + 1] - coords[i])))
    if len(vals) and s[-1] == 0.0:
        crossings.append(float(coords[-1]))
    return np.array(sorted(crossings))


@dataclass(frozen=True)
class TolConfig:
    """Tolerances and optional bound data for the invariant sweep."""

    c_tol: float = 1e-12
    d_tol: float = 1e-10
    n_tol: float = 0.0
    cap_base: float | None = None   # max of lifted initial density (weak max principle)
    min_floor: float | None = None  # eps * exp(-M0 T) barrier for regularized runs


@dataclass(frozen=True)
class Violation:
    invariant: str
    cell: tuple
    magnitude: float

    def __str__(self) -> str:
        return f"{self.invariant} at cell {self.cell} by {self.magnitude:.3e}"


def _worst_cell(mask_values: np.ndarray) -> tuple:
    idx = np.unravel_index(int(np.argmax(mask_values)), mask_values.shape)
    return tuple(int(i) for i in idx)


def check_all(state: State, consts: DerivedConstants, tolcfg: TolConfig) -> list[Violation]:
    """Bound and maximum-principle checks; empty list on success."""
    out = []
    n, c, d = state.n.values, state.c.values, state.d.values

    deficit = -(n + tolcfg.n_tol)
    if np.max(deficit) > 0.0:
        out.append(Violation("density nonnegativity", _worst_cell(deficit), float(np.max(deficit))))

    low = -(c + tolcfg.c_tol)
    if np.max(low) > 0.0:
        out.append(Violation("fraction lower bound", _worst_cell(low), float(np.max(low))))
    high = c - (1.0 + tolcfg.c_tol)
    if np.max(high) > 0.0:
        out.append(Violation("fraction upper bound", _worst_cell(high), float(np.max(high))))

    low_d = -(d + tolcfg.d_tol)
    if np.max(low_d) > 0.0:
        out.append(Violation("nutrient floor", _worst_cell(low_d), float(np.max(low_d))))
    high_d = d - (consts.L + tolcfg.d_tol)
    if np.max(high_d) > 0.0:
        out.append(Violation("nutrient ceiling", _worst_cell(high_d), float(np.max(high_d))))

    if tolcfg.cap_base is not None:
        cap = math.exp(consts.G0 * state.t) * tolcfg.cap_base * (1.0 + 1e-6)
        over = n - cap
        if np.max(over) > 0.0:
            out.append(Violation("weak maximum principle", _worst_cell(over), float(np.max(over))))

    if tolcfg.min_floor is not None:
        under = (tolcfg.min_floor - 1e-12) - n
        if np.max(under) > 0.0:
            out.append(Violation("lower barrier", _worst_cell(under), float(np.max(under))))

    return out
