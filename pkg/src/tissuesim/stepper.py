"""Time stepping for the coupled density / fraction / nutrient system.

One step advances, in order:

  1. total density n: backward Euler on the degenerate diffusion equation
     dn/dt = lap(K(n)) + eps*lap(n) + (G(d) - D*c) n, solved by Newton
     (K is the flux potential, gamma/(gamma+1) * n^(gamma+1));
  2. autophagic fraction c = n2/n: explicit upwind advection by the Darcy
     velocity u = -grad(n^gamma) plus explicit reaction
     K1(d)(1-c) - K2(d)c - D c(1-c), whose right side points into [0, 1];
  3. nutrient d: semi-implicit solve of b dd/dt - lap(d) = -psi(d_old) n + a c n
     with Dirichlet boundary data, clamped to [0, L].

Evolving (n, c) instead of the two species densities keeps n1 + n2 = n exact
and gives the fraction a maximum principle on [0, 1] for free.  The fraction
equation is the algebraic consequence of the two species equations:
subtracting c times the n-equation from the n2-equation yields
dc/dt - grad(p).grad(c) = K1(1-c) - K2 c - D c(1-c).

The regularized mode adds eps-viscosity to each species equation (which in
(n, c) variables becomes eps*lap(c) plus a drift 2 eps grad(ln n)) and routes
every nonlinear coefficient through the band cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import SolverFailure
from .grid import Field, Grid, divergence, face_gradient, laplacian_dirichlet, laplacian_neumann, upwind_face_values
from .model import DerivedConstants, ModelParams, cutoff

#: Jacobian degeneracy floor: diffusion derivative is evaluated at max(n, this)
VACUUM_FLOOR = 1e-14

#: fraction bound slack before the step records an invariant violation
FRACTION_TOL = 1e-12

#: monotonicity budget slack for the explicit fraction update
CFL_SLACK = 1e-9


@dataclass(frozen=True)
class State:
    """Cell fields at one instant; n1, n2, p, v are derived views."""

    t: float
    n: Field
    c: Field
    d: Field
    gamma: float

    @property
    def n1(self) -> Field:
        return self.n.with_values((1.0 - self.c.values) * self.n.values)

    @property
    def n2(self) -> Field:
        return self.n.with_values(self.c.values * self.n.values)

    @property
    def p(self) -> Field:
        return self.n.with_values(np.maximum(self.n.values, 0.0) ** self.gamma)

    @property
    def v(self) -> Field:
        return self.n.with_values(np.maximum(self.n.values, 0.0) ** (self.gamma + 1.0))

    @property
    def grid(self) -> Grid:
        return self.n.grid


@dataclass(frozen=True)
class SolverSettings:
    newton_tol: float = 1e-10
    linear_tol: float = 1e-10
    newton_max: int = 50
    linear_max: int = 10_000
    retry_max: int = 8
    safety: float = 0.5
    dt_max: float = math.inf


@dataclass
class StepReport:
    """Per-step solver telemetry."""

    dt_used: float = 0.0
    newton_iters: int = 0
    newton_residual: float = math.inf
    linear_iters: int = 0
    cfl_limit: float = math.inf
    clamped_cells: int = 0
    cutoff_activations: int = 0
    retries: int = 0
    violations: list[str] = field(default_factory=list)


def _reaction_rate(params: ModelParams, d: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Per-cell linear reaction rate r with R = r * n (plain mode)."""
    g = np.asarray(params.rates.G(d), dtype=float)
    return g - params.D * c


def _flux_potential(n: np.ndarray, gamma: float) -> np.ndarray:
    """K(n) = gamma/(gamma+1) * (n+)^(gamma+1), so lap K = the density flux."""
    return gamma / (gamma + 1.0) * np.maximum(n, 0.0) ** (gamma + 1.0)


def _flux_potential_cut(n: np.ndarray, gamma: float, ell: float) -> np.ndarray:
    """Cutoff flux potential: gamma * integral of cutoff(s, ell)^gamma ds.

    Matches the plain potential on [0, ell] and continues linearly above,
    which is exactly the effect of clamping the mobility coefficients.
    """
    base = np.minimum(np.maximum(n, 0.0), ell)
    out = gamma / (gamma + 1.0) * base ** (gamma + 1.0)
    above = n > ell
    if np.any(above):
        out = out + np.where(above, gamma * ell**gamma * (n - ell), 0.0)
    return out


def _density_rhs(
    n: np.ndarray,
    state: State,
    params: ModelParams,
    regularized: bool,
    ell: float,
) -> np.ndarray:
    """Right-hand side of dn/dt = ... with c, d frozen at the current state."""
    grid = state.grid
    nf = Field(grid, n)
    if regularized:
        pot = _flux_potential_cut(n, params.gamma, ell)
        c = state.c.values
        g = np.asarray(params.rates.G(cutoff(state.d.values, ell)), dtype=float)
        reaction = g * cutoff((1.0 - c) * n, ell) + (g - params.D) * cutoff(c * n, ell)
    else:
        pot = _flux_potential(n, params.gamma)
        reaction = _reaction_rate(params, state.d.values, state.c.values) * n
    out = laplacian_neumann(Field(grid, pot)) + reaction
    if params.eps_reg > 0.0:
        out = out + params.eps_reg * laplacian_neumann(nf)
    return out


def _diffusion_derivative(
    n: np.ndarray, params: ModelParams, regularized: bool, ell: float
) -> np.ndarray:
    """d/dn of the flux potential, floored away from the vacuum."""
    floored = np.maximum(n, VACUUM_FLOOR)
    if regularized:
        deriv = params.gamma * cutoff(floored, ell) ** params.gamma
    else:
        deriv = params.gamma * floored**params.gamma
    return deriv + params.eps_reg


def _reaction_derivative(
    n: np.ndarray, state: State, params: ModelParams, regularized: bool, ell: float
) -> np.ndarray:
    c = state.c.values
    if not regularized:
        g = np.asarray(params.rates.G(state.d.values), dtype=float)
        return g - params.D * c
    g = np.asarray(params.rates.G(cutoff(state.d.values, ell)), dtype=float)
    n1 = (1.0 - c) * n
    n2 = c * n
    active1 = ((n1 > 0.0) & (n1 < ell)).astype(float)
    active2 = ((n2 > 0.0) & (n2 < ell)).astype(float)
    return g * (1.0 - c) * active1 + (g - params.D) * c * active2


def _count_cutoff_activations(n: np.ndarray, c: np.ndarray, ell: float) -> int:
    """Cells where any band cutoff actually clamps (n, n1 or n2 outside (0, ell))."""
    n1 = (1.0 - c) * n
    n2 = c * n
    hit = (n > ell) | (n < 0.0)
    for s in (n1, n2):
        hit = hit | (s > ell) | (s < 0.0)
    return int(np.count_nonzero(hit))


def _solve_newton_system(
    grid: Grid,
    a: np.ndarray,
    r: np.ndarray,
    dt: float,
    rhs: np.ndarray,
    settings: SolverSettings,
) -> tuple[np.ndarray, int]:
    """Solve (I - dt*(lap o diag(a) + diag(r))) delta = rhs.

    1D goes through the banded direct solver.  2D is symmetrized with
    S = diag(sqrt(a)) -- S J S^-1 = diag(1 - dt r) - dt S lap S is SPD -- and
    solved by Jacobi-preconditioned CG.
    """
    if grid.dim == 1:
        h2 = grid.h[0] ** 2
        nc = grid.cells[0]
        deg = np.full(nc, 2.0)
        deg[0] = deg[-1] = 1.0
        diag = 1.0 + dt * deg * a / h2 - dt * r
        lower = np.zeros(nc)
        upper = np.zeros(nc)
        lower[1:] = -dt * a[:-1] / h2
        upper[:-1] = -dt * a[1:] / h2
        m = linalg.TriDiag(lower=lower, diag=diag, upper=upper)
        return linalg.thomas_solve(m, rhs), 1

    reac_diag = 1.0 - dt * r
    if np.min(reac_diag) <= 0.0:
        raise SolverFailure("density Jacobian lost positivity; dt too large for the reactions")
    a_safe = np.maximum(a, 1e-30)
    sqrt_a = np.sqrt(a_safe)

    def matvec(y_flat: np.ndarray) -> np.ndarray:
        y = y_flat.reshape(grid.shape)
        lap = laplacian_neumann(Field(grid, sqrt_a * y))
        return (reac_diag * y - dt * sqrt_a * lap).ravel()

    hx2, hy2 = grid.h[0] ** 2, grid.h[1] ** 2
    degx = np.full(grid.shape, 2.0)
    degx[0, :] = degx[-1, :] = 1.0
    degy = np.full(grid.shape, 2.0)
    degy[:, 0] = degy[:, -1] = 1.0
    diag = reac_diag + dt * a_safe * (degx / hx2 + degy / hy2)
    op = linalg.LinOp(shape_n=grid.num_cells, matvec=matvec, diagonal=diag.ravel())
    result = linalg.pcg_solve(op, (sqrt_a * rhs).ravel(), settings.linear_tol, settings.linear_max)
    return (result.x.reshape(grid.shape) / sqrt_a), result.iterations


def density_solve(
    state: State,
    dt: float,
    params: ModelParams,
    settings: SolverSettings,
    regularized: bool = False,
    ell: float = 0.0,
) -> tuple[Field, StepReport]:
    """Backward-Euler solve for the total density with frozen c and d.

    Newton iterates on the cell vector; after convergence the update is
    re-applied in explicit conservative form, n_new = n_old + dt*rhs(n*),
    so that no-flux runs conserve mass to rounding rather than to the
    Newton tolerance.  The result is floored at zero with clamps counted.
    """
    grid = state.grid
    n_old = state.n.values
    report = StepReport(dt_used=dt)
    n_k = n_old.copy()
    res_norm = math.inf
    for it in range(settings.newton_max + 1):
        f = n_k - n_old - dt * _density_rhs(n_k, state, params, regularized, ell)
        res_norm = float(np.max(np.abs(f)))
        report.newton_iters = it + 1  # residual evaluations, 1 on a fixed point
        report.newton_residual = res_norm
        if not math.isfinite(res_norm):
            raise SolverFailure("density Newton residual is non-finite")
        if res_norm <= settings.newton_tol:
            break
        if it == settings.newton_max:
            raise SolverFailure(
                f"density Newton did not converge in {settings.newton_max} iterations "
                f"(residual {res_norm:.3e})"
            )
        a = _diffusion_derivative(n_k, params, regularized, ell)
        r = _reaction_derivative(n_k, state, params, regularized, ell)
        delta, lin = _solve_newton_system(grid, a, r, dt, -f, settings)
        report.linear_iters += lin
        # damped update: halve until the residual shrinks, full step as fallback
        step_len = 1.0
        accepted = None
        for _ in range(8):
            trial = np.maximum(n_k + step_len * delta, 0.0)
            f_trial = trial - n_old - dt * _density_rhs(trial, state, params, regularized, ell)
            trial_norm = float(np.max(np.abs(f_trial)))
            if math.isfinite(trial_norm) and trial_norm < res_norm:
                accepted = trial
                break
            step_len *= 0.5
        n_k = accepted if accepted is not None else np.maximum(n_k + delta, 0.0)

    n_new = n_old + dt * _density_rhs(n_k, state, params, regularized, ell)
    report.clamped_cells = int(np.count_nonzero(n_new < 0.0))
    n_new = np.maximum(n_new, 0.0)
    if regularized:
        report.cutoff_activations = _count_cutoff_activations(n_k, state.c.values, ell)
    return Field(grid, n_new), report


def _face_velocities(n_new: Field, params: ModelParams, regularized: bool) -> tuple[np.ndarray, ...]:
    """Darcy velocity u = -grad(n^gamma) per interior face.

    In regularized mode the species viscosity contributes an extra drift
    -2 eps grad(ln n) (from rewriting eps*lap(n_i) in fraction variables).
    """
    grid = n_new.grid
    p = np.maximum(n_new.values, 0.0) ** params.gamma
    grads = face_gradient(Field(grid, p))
    u = tuple(-g for g in grads)
    if regularized and params.eps_reg > 0.0:
        logn = np.log(np.maximum(n_new.values, VACUUM_FLOOR))
        dlog = face_gradient(Field(grid, logn))
        u = tuple(ui - 2.0 * params.eps_reg * gi for ui, gi in zip(u, dlog))
    return u


def fraction_update(
    state: State,
    n_new: Field,
    dt: float,
    params: ModelParams,
    regularized: bool = False,
) -> tuple[Field, float]:
    """Explicit upwind advection of the fraction plus explicit reaction.

    The per-cell monotonicity budget (advection + diffusion Courant numbers
    plus dt times the reaction rates) must stay at or below one; that is the
    condition under which the update is a convex combination and the
    reaction keeps c inside [0, 1].  A violated budget raises SolverFailure
    so the caller can halve dt.
    """
    grid = state.grid
    c = state.c.values
    u = _face_velocities(n_new, params, regularized)

    # advective form via flux differencing: div(u c_up) - c div(u)
    cf = Field(grid, c)
    if grid.dim == 1:
        up_c = (upwind_face_values(c[:-1], c[1:], u[0]),)
    else:
        up_c = (
            upwind_face_values(c[:-1, :], c[1:, :], u[0]),
            upwind_face_values(c[:, :-1], c[:, 1:], u[1]),
        )
    adv = divergence(grid, tuple(ui * ci for ui, ci in zip(u, up_c))) - c * divergence(grid, u)

    # per-cell Courant budget of the convex-combination argument
    budget = np.zeros(grid.shape)
    speed_max = 0.0
    for axis, ui in enumerate(u):
        h = grid.h[axis]
        speed_max = max(speed_max, float(np.max(np.abs(ui))) if ui.size else 0.0)
        inflow_lo = np.maximum(ui, 0.0)   # face feeds the right cell
        inflow_hi = np.maximum(-ui, 0.0)  # face feeds the left cell
        if grid.dim == 1:
            budget[1:] += dt / h * inflow_lo
            budget[:-1] += dt / h * inflow_hi
        elif axis == 0:
            budget[1:, :] += dt / h * inflow_lo
            budget[:-1, :] += dt / h * inflow_hi
        else:
            budget[:, 1:] += dt / h * inflow_lo
            budget[:, :-1] += dt / h * inflow_hi

    diff = 0.0
    if regularized and params.eps_reg > 0.0:
        diff = params.eps_reg * laplacian_neumann(cf)
        for h in grid.h:
            budget += 2.0 * dt * params.eps_reg / h**2

    d_arg = state.d.values if not regularized else cutoff(state.d.values, params.ell_cut)
    k1 = np.asarray(params.rates.K1(d_arg), dtype=float)
    k2 = np.asarray(params.rates.K2(d_arg), dtype=float)
    reaction = k1 * (1.0 - c) - k2 * c - params.D * c * (1.0 - c)
    budget += dt * (k1 + k2 + params.D)

    worst = float(np.max(budget))
    if worst > 1.0 + CFL_SLACK:
        raise SolverFailure(f"fraction update monotonicity budget {worst:.3f} exceeds 1")

    c_new = c + dt * (-adv + diff + reaction)
    h_min = min(grid.h)
    cfl_limit = h_min / speed_max if speed_max > 0.0 else math.inf
    return Field(grid, c_new), cfl_limit


def nutrient_solve(
    state: State,
    n_new: Field,
    c_new: Field,
    dt: float,
    params: ModelParams,
    consts: DerivedConstants,
    settings: SolverSettings,
) -> tuple[Field, int, int]:
    """Semi-implicit nutrient solve: implicit diffusion, explicit consumption.

    Solves (b/dt)(d_new - d_old) - lap_dirichlet(d_new) = -psi(d_old) n + a c n
    and clamps the result to [0, L], counting clamp events.  Returns
    (field, clamped_cells, linear_iterations).
    """
    grid = state.grid
    d_old = state.d.values
    b_dt = params.b / dt
    psi_old = np.asarray(params.rates.psi(d_old), dtype=float)
    source = -psi_old * n_new.values + params.a * c_new.values * n_new.values
    rhs = b_dt * d_old + source

    if grid.dim == 1:
        h2 = grid.h[0] ** 2
        nc = grid.cells[0]
        diag = np.full(nc, b_dt + 2.0 / h2)
        diag[0] = diag[-1] = b_dt + 3.0 / h2
        lower = np.full(nc, -1.0 / h2)
        upper = np.full(nc, -1.0 / h2)
        lower[0] = upper[-1] = 0.0
        rhs = rhs.copy()
        rhs[0] += 2.0 * params.d_b / h2
        rhs[-1] += 2.0 * params.d_b / h2
        m = linalg.TriDiag(lower=lower, diag=diag, upper=upper)
        d_new = linalg.thomas_solve(m, rhs)
        lin_iters = 1
    else:
        # rhs picks up the Dirichlet ghost contribution; operator uses zero data
        bnd = laplacian_dirichlet(Field(grid, np.zeros(grid.shape)), params.d_b)
        rhs = rhs + bnd

        def matvec(x_flat: np.ndarray) -> np.ndarray:
            x = x_flat.reshape(grid.shape)
            return (b_dt * x - laplacian_dirichlet(Field(grid, x), 0.0)).ravel()

        hx2, hy2 = grid.h[0] ** 2, grid.h[1] ** 2
        degx = np.full(grid.shape, 2.0)
        degx[0, :] = degx[-1, :] = 3.0
        degy = np.full(grid.shape, 2.0)
        degy[:, 0] = degy[:, -1] = 3.0
        diag = b_dt + degx / hx2 + degy / hy2
        op = linalg.LinOp(shape_n=grid.num_cells, matvec=matvec, diagonal=diag.ravel())
        result = linalg.pcg_solve(op, rhs.ravel(), settings.linear_tol, settings.linear_max)
        d_new = result.x.reshape(grid.shape)
        lin_iters = result.iterations

    clamped = int(np.count_nonzero((d_new < 0.0) | (d_new > consts.L)))
    d_new = np.clip(d_new, 0.0, consts.L)
    return Field(grid, d_new), clamped, lin_iters


def suggest_dt(
    state: State,
    params: ModelParams,
    consts: DerivedConstants,
    safety: float,
) -> float:
    """Advective-CFL and reaction-rate based step suggestion.

    dt = safety * min(h / max|u|, 1 / (K1_max + K2_max + D)), clipped to the
    remaining horizon.
    """
    u = _face_velocities(state.n, params, regularized=False)
    speed = 0.0
    for ui in u:
        if ui.size:
            speed = max(speed, float(np.max(np.abs(ui))))
    if not math.isfinite(speed):
        raise SolverFailure("non-finite transport velocity")
    h_min = min(state.grid.h)
    dt_adv = h_min / speed if speed > 0.0 else math.inf
    rate_sum = consts.K1_max + consts.K2_max + params.D
    dt_react = 1.0 / rate_sum if rate_sum > 0.0 else math.inf
    dt = safety * min(dt_adv, dt_react)
    remaining = params.T_final - state.t
    if remaining > 0.0:
        dt = min(dt, remaining)
    return dt


def _quick_invariant_check(s: State, consts: DerivedConstants) -> list[str]:
    out = []
    c_min, c_max = s.c.min(), s.c.max()
    if c_min < -FRACTION_TOL or c_max > 1.0 + FRACTION_TOL:
        out.append(f"fraction out of [0,1] by {max(-c_min, c_max - 1.0):.3e}")
    if s.n.min() < 0.0:
        out.append(f"negative density {s.n.min():.3e}")
    if s.d.min() < -1e-10 or s.d.max() > consts.L + 1e-10:
        out.append("nutrient outside [0, L]")
    return out


def _pipeline(
    state: State,
    params: ModelParams,
    consts: DerivedConstants,
    settings: SolverSettings,
    dt: float,
    regularized: bool,
) -> tuple[State, StepReport]:
    ell = params.ell_cut if regularized else 0.0
    n_new, report = density_solve(state, dt, params, settings, regularized, ell)
    c_new, cfl_limit = fraction_update(state, n_new, dt, params, regularized)
    report.cfl_limit = cfl_limit
    d_new, clamped, lin = nutrient_solve(state, n_new, c_new, dt, params, consts, settings)
    report.clamped_cells += clamped
    report.linear_iters += lin
    new_state = State(t=state.t + dt, n=n_new, c=c_new, d=d_new, gamma=params.gamma)
    report.dt_used = dt
    report.violations = _quick_invariant_check(new_state, consts)
    return new_state, report


def step(
    state: State,
    params: ModelParams,
    consts: DerivedConstants,
    settings: SolverSettings,
    dt_hint: float,
) -> tuple[State, StepReport]:
    """Advance one step of the plain (non-cutoff) scheme, halving dt on failure."""
    return _step_with_retries(state, params, consts, settings, dt_hint, regularized=False)


def regularized_step(
    state: State,
    params: ModelParams,
    consts: DerivedConstants,
    settings: SolverSettings,
    dt_hint: float,
) -> tuple[State, StepReport]:
    """Advance one step of the viscous cutoff scheme (eps_reg > 0 required)."""
    if not (params.eps_reg > 0.0):
        raise ValueError("regularized_step requires eps_reg > 0; use step instead")
    if not (params.ell_cut > 0.0):
        raise ValueError("regularized_step requires a resolved cutoff level ell_cut > 0")
    return _step_with_retries(state, params, consts, settings, dt_hint, regularized=True)


def _step_with_retries(
    state: State,
    params: ModelParams,
    consts: DerivedConstants,
    settings: SolverSettings,
    dt_hint: float,
    regularized: bool,
) -> tuple[State, StepReport]:
    if not (dt_hint > 0.0):
        raise ValueError(f"dt must be positive, got {dt_hint}")
    dt = dt_hint
    last_error = None
    for attempt in range(settings.retry_max + 1):
        try:
            new_state, report = _pipeline(state, params, consts, settings, dt, regularized)
            report.retries = attempt
            return new_state, report
        except SolverFailure as exc:
            last_error = exc
            dt *= 0.5
    raise SolverFailure(
        f"step failed after {settings.retry_max} dt halvings (last: {last_error})"
    )
