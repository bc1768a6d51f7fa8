"""Grid types, initial-data projection and the explicit time-marching loop."""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .coefficients import PiecewiseCoefficient
from .errors import CflError, ConfigError, SupportError

#: default safety factor applied to the stability limit
CFL_SAFETY = 0.9
#: time step ratio used when the flux is flat (zero Lipschitz bound)
LAMBDA_MAX = 1.0


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on [x_left, x_right] with a time horizon.

    ``lam`` is the fixed ratio dt/dx; leave it None to have :func:`run`
    derive it from the stability limit of the actual data.
    """

    x_left: float
    x_right: float
    n_cells: int
    t_final: float
    lam: float | None = None

    def __post_init__(self):
        if self.n_cells < 1:
            raise ConfigError("n_cells must be positive")
        if not self.x_right > self.x_left:
            raise ConfigError("domain endpoints out of order")
        if self.t_final < 0.0:
            raise ConfigError("t_final must be nonnegative")
        if self.lam is not None and self.lam <= 0.0:
            raise ConfigError("lambda must be positive")

    @property
    def dx(self):
        return (self.x_right - self.x_left) / self.n_cells

    @property
    def dt(self):
        if self.lam is None:
            raise ConfigError("grid has no lambda set")
        return self.lam * self.dx

    def cell_centers(self):
        j = np.arange(self.n_cells)
        return self.x_left + (j + 0.5) * self.dx

    def cell_edges(self):
        return self.x_left + np.arange(self.n_cells + 1) * self.dx

    def ghost_centers(self):
        """Cell centers including one ghost center on each side."""
        j = np.arange(-1, self.n_cells + 1)
        return self.x_left + (j + 0.5) * self.dx


@dataclass(frozen=True)
class StateSnapshot:
    """Cell-average values at one time level."""

    time: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("state values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n_cells(self):
        return self.values.shape[0]


@dataclass
class RunResult:
    """Snapshots plus the resolved constants of one time-marching run."""

    grid: GridSpec
    lam: float
    dt: float
    n_steps: int
    final_time: float
    alpha_bar: float
    state_bound: float
    lipschitz: float
    r_bar: float
    tv_initial: float
    levels: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)

    @property
    def initial(self):
        return self.snapshots[0]

    @property
    def final(self):
        return self.snapshots[-1]


def coefficient_arrays(model, grid):
    """Scale and critical-point values at the ghost-extended cell centers."""
    xg = grid.ghost_centers()
    return np.asarray(model.scale(xg), dtype=float), np.asarray(
        model.center(xg), dtype=float
    )


def datum_activity_hull(u0):
    """Hull of the positions where the datum varies (None if constant)."""
    if isinstance(u0, PiecewiseCoefficient):
        return u0.activity_hull()
    hull = getattr(u0, "activity_hull", None)
    if callable(hull):
        return hull()
    return hull


def project_initial_data(u0, grid, margin=0.0):
    """Cell averages of the datum: exact for step data, 4-point quadrature else.

    Raises SupportError when the datum's activity hull, widened by ``margin``,
    leaves the domain.
    """
    hull = datum_activity_hull(u0)
    if margin > 0.0 or hull is not None:
        check_influence_margin(hull, grid, margin)
    edges = grid.cell_edges()
    if isinstance(u0, PiecewiseCoefficient):
        values = u0.cell_averages(edges)
    else:
        dx = grid.dx
        offsets = (np.arange(4) + 0.5) * (dx / 4.0)
        pts = edges[:-1, None] + offsets[None, :]
        values = np.mean(np.asarray(u0(pts.ravel()), dtype=float).reshape(-1, 4), axis=1)
    return StateSnapshot(0.0, values)


def check_influence_margin(hull, grid, margin):
    """Require hull +- margin to stay inside the domain."""
    if hull is None:
        return
    lo, hi = hull
    if lo - margin < grid.x_left or hi + margin > grid.x_right:
        raise SupportError(
            f"activity hull [{lo}, {hi}] with margin {margin} leaves the "
            f"domain [{grid.x_left}, {grid.x_right}]"
        )


def interface_flux(model, u, v, xl, xr):
    """Godunov flux between a left state u at xl and right state v at xr."""
    ml = model.center(xl)
    mr = model.center(xr)
    left = model.eval_flux(max(u, ml), xl)
    right = model.eval_flux(min(v, mr), xr)
    return max(left, right)


def alpha_bar(model, state, grid):
    """Largest flux value seen by the projected data at the cell centers."""
    x = grid.cell_centers()
    return float(np.max(model.eval_flux(state.values, x)))


def alpha_bar_exact(model, u0):
    """sup over x of A(u0(x), x) for a piecewise-constant datum."""
    reps = np.union1d(
        u0.piece_representatives(),
        np.union1d(
            model.scale.piece_representatives(),
            model.center.piece_representatives(),
        ),
    )
    return float(np.max(model.eval_flux(u0(reps), reps)))


def cfl_lambda(model, m_bound, safety=CFL_SAFETY, lam_max=LAMBDA_MAX):
    """Stable dt/dx ratio for states bounded by m_bound."""
    lip = model.lipschitz_bound(m_bound)
    if lip == 0.0:
        return lam_max
    return safety / lip


def step(model, grid, state, lam):
    """One explicit update; pure in (model, grid, state)."""
    scale_ext, center_ext = coefficient_arrays(model, grid)
    new_values = kernels.godunov_step(state.values, scale_ext, center_ext, lam)
    return StateSnapshot(state.time + lam * grid.dx, new_values)


def run_activity_hull(model, u0):
    """Hull of datum jumps and coefficient jumps together."""
    pieces = []
    hull = datum_activity_hull(u0)
    if hull is not None:
        pieces.extend(hull)
    bp = model.activity_breakpoints()
    if bp.size:
        pieces.extend((float(bp[0]), float(bp[-1])))
    if not pieces:
        return None
    return min(pieces), max(pieces)


def resolve_constants(model, grid, u0):
    """Project the datum and derive the run's bounds and time step ratio."""
    init = project_initial_data(u0, grid)
    abar = alpha_bar(model, init, grid)
    m_bound = model.invariant_bound(abar)
    lip = model.lipschitz_bound(m_bound)
    lam = grid.lam if grid.lam is not None else cfl_lambda(model, m_bound)
    if lam * lip > 1.0 + 1e-12:
        raise CflError(
            f"lambda {lam} violates the stability limit 1/L = {1.0 / lip}"
        )
    return init, abar, m_bound, lip, lam


def run(model, grid, u0, hooks=(), record_all=False, output_times=None,
        n_steps=None, check_margin=True):
    """March the projected datum to the time horizon.

    The number of steps is the largest N with N * dt <= t_final (no partial
    final step); ``n_steps`` overrides it for exact step-count control.
    Snapshots are recorded at t = 0, at the final level, and at the levels
    containing ``output_times``; ``record_all`` keeps every level. ``hooks``
    are called as hook(level, time, previous_values, current_values) after
    each step.
    """
    init, abar, m_bound, lip, lam = resolve_constants(model, grid, u0)
    dt = lam * grid.dx
    if n_steps is None:
        n_total = int(np.floor(grid.t_final / dt + 1e-9))
    else:
        n_total = int(n_steps)
    if check_margin:
        hull = run_activity_hull(model, u0)
        check_influence_margin(hull, grid, lip * n_total * dt)

    record = {0, n_total}
    if output_times is not None:
        for t in output_times:
            record.add(min(n_total, int(np.floor(t / dt + 1e-9))))
    if record_all:
        record.update(range(n_total + 1))

    scale_ext, center_ext = coefficient_arrays(model, grid)
    result = RunResult(
        grid=grid,
        lam=lam,
        dt=dt,
        n_steps=n_total,
        final_time=n_total * dt,
        alpha_bar=abar,
        state_bound=m_bound,
        lipschitz=lip,
        r_bar=model.r_bar(m_bound),
        tv_initial=float(np.sum(np.abs(np.diff(init.values)))),
    )
    result.levels.append(0)
    result.snapshots.append(init)

    cur = init.values
    if hooks:
        for level in range(1, n_total + 1):
            nxt = kernels.godunov_step(cur, scale_ext, center_ext, lam)
            for hook in hooks:
                hook(level, level * dt, cur, nxt)
            cur = nxt
            if level in record:
                result.levels.append(level)
                result.snapshots.append(StateSnapshot(level * dt, cur))
    else:
        level = 0
        for target in sorted(record - {0}):
            cur = kernels.godunov_march(
                cur, scale_ext, center_ext, lam, target - level
            )
            level = target
            result.levels.append(level)
            result.snapshots.append(StateSnapshot(level * dt, cur))
    return result
