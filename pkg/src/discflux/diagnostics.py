"""Per-run diagnostics: every structural property the scheme is supposed to
have, measured on actual trajectories.

The checks cover exact stationarity of the level-set profiles, monotone-scheme
side effects (invariant region, L1 contraction), the discrete entropy
inequality with the level-set profiles in place of constants, mass
conservation, time-continuity sums and variation tracking of the transformed
state.
"""

from dataclasses import dataclass, field

import numpy as np

from . import scheme
from .errors import DomainError, GridMismatchError
from .kernels import extend_with_ghosts, godunov_march, interface_fluxes_numpy
from .scheme import StateSnapshot, coefficient_arrays

#: rounding-only tolerances; the inequalities are exact in real arithmetic
ENTROPY_TOL = 1e-12
INVARIANT_TOL = 1e-12
TIME_CONTINUITY_TOL = 1e-12
CONTRACTION_SLACK = 1e-13
Z_INCREMENT_TOL = 1e-12
FLUX_CONTINUITY_TOL = 1e-12
#: conservation drift allowance per run, times n_cells * state bound
CONSERVATION_FACTOR = 1e-12
#: stationarity defect allowance (root-solve precision dominates)
STATIONARITY_TOL = 1e-10

DEFAULT_ENTROPY_ALPHAS = 5


def _values(state):
    return state.values if isinstance(state, StateSnapshot) else np.asarray(state, float)


def transform_to_z(model, grid, state):
    """Increasing transform of the state, evaluated at the cell centers."""
    return model.singular_map(_values(state), grid.cell_centers())


def total_variation(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("total variation of an empty sequence")
    if values.size == 1:
        return 0.0
    return float(np.sum(np.abs(np.diff(values))))


def entropy_flux(model, grid, values, k):
    """Interface entropy flux: Godunov flux of u|k joins minus u&k meets."""
    scale_ext, center_ext = coefficient_arrays(model, grid)
    u_ext = extend_with_ghosts(np.asarray(values, dtype=float))
    k_ext = extend_with_ghosts(np.asarray(k, dtype=float))
    hi = interface_fluxes_numpy(np.maximum(u_ext, k_ext), scale_ext, center_ext)
    lo = interface_fluxes_numpy(np.minimum(u_ext, k_ext), scale_ext, center_ext)
    return hi - lo


def entropy_residual(model, grid, lam, pre, post, alpha, branch):
    """Per-cell residual of the discrete entropy inequality (should be <= 0).

    ``post`` must be one step of the scheme applied to ``pre`` with the same
    ratio ``lam``.
    """
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    pre = _values(pre)
    post = _values(post)
    k = model.k_profile(alpha, branch, grid.cell_centers())
    flux = entropy_flux(model, grid, pre, k)
    return np.abs(post - k) - np.abs(pre - k) + lam * (flux[1:] - flux[:-1])


def time_continuity_rhs(lam, r_bar, lipschitz, tv_a, tv_u0, tv_um):
    """Level-independent bound on the L1 distance of consecutive levels."""
    return 2.0 * lam * (r_bar * tv_a + lipschitz * (tv_u0 + tv_um))


def contraction_history(result_u, result_v):
    """dx-weighted L1 distance per recorded level of two paired runs."""
    if result_u.grid != result_v.grid or result_u.lam != result_v.lam:
        raise GridMismatchError("paired runs must share grid and lambda")
    if result_u.levels != result_v.levels:
        raise GridMismatchError("paired runs must record the same levels")
    dx = result_u.grid.dx
    return np.array(
        [
            dx * float(np.sum(np.abs(a.values - b.values)))
            for a, b in zip(result_u.snapshots, result_v.snapshots)
        ]
    )


def stationarity_defect(model, grid, alpha, branch, lam=None, n_steps=1):
    """Largest per-cell change after stepping a level-set profile."""
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    k = model.k_profile(alpha, branch, grid.cell_centers())
    if lam is None:
        lam = scheme.cfl_lambda(model, model.invariant_bound(alpha))
    scale_ext, center_ext = coefficient_arrays(model, grid)
    out = godunov_march(np.asarray(k, dtype=float), scale_ext, center_ext, lam,
                        int(n_steps))
    return float(np.max(np.abs(out - k)))


def z_increment_bound_check(model, grid, lam, state, m_bound, r_bar, lipschitz):
    """Check the one-sided increment bound of the transformed state.

    Returns (ok, margins, worst_pair) where margins[j] = rhs - lhs for the
    cell pair (j, j+1) and worst_pair is the index of the smallest margin.
    """
    u = _values(state)
    n = u.shape[0]
    if n < 2:
        raise ValueError("need at least two cells")
    x = grid.cell_centers()
    xg = grid.ghost_centers()
    scale_ext, center_ext = coefficient_arrays(model, grid)
    a_ext = np.asarray(model.coefficient_a(xg), dtype=float)
    m_c = center_ext[1:-1]

    z = model.singular_map(u, x)
    lhs = np.maximum(z[1:] - z[:-1], 0.0)[: n - 1]

    flux = interface_fluxes_numpy(extend_with_ghosts(u), scale_ext, center_ext)
    # slope signs at (u_j, x_j) and (u_{j+1}, x_j); zero slope counts neither
    sigma_minus = (u[:-1] < m_c[:-1]).astype(float)
    sigma_plus = (u[1:] > m_c[:-1]).astype(float)
    term_minus = sigma_minus * np.abs(flux[1:n] - flux[0 : n - 1])
    term_plus = sigma_plus * np.abs(flux[2 : n + 1] - flux[1:n])

    def _omega(c_ext):
        return (
            np.abs(c_ext[1:n] - c_ext[0 : n - 1])
            + 4.0 * np.abs(c_ext[2 : n + 1] - c_ext[1:n])
            + np.abs(c_ext[3 : n + 2] - c_ext[1:n])
        )

    omega = r_bar * _omega(a_ext) + lipschitz * _omega(center_ext)
    margins = term_minus + term_plus + omega - lhs
    worst = int(np.argmin(margins))
    return bool(np.all(margins >= -Z_INCREMENT_TOL)), margins, worst


def sample_flux_continuity(model, m_bound, lipschitz, rng, n_samples=200,
                           x_span=3.0):
    """Count violations of the four interface-flux continuity estimates."""
    bp = model.activity_breakpoints()
    centers = np.concatenate([bp, [0.0]])
    violations = 0
    for _ in range(n_samples):
        u, uh, v, vh = rng.uniform(-m_bound, m_bound, size=4)
        base = rng.choice(centers)
        x, xh, y, yh = base + rng.uniform(-x_span, x_span, size=4)
        f = scheme.interface_flux
        pairs = (
            (abs(f(model, uh, v, x, y) - f(model, u, v, x, y)),
             lipschitz * abs(uh - u)),
            (abs(f(model, u, vh, x, y) - f(model, u, v, x, y)),
             lipschitz * abs(vh - v)),
            (abs(f(model, u, v, xh, y) - f(model, u, v, x, y)),
             model.r_modulus(max(u, model.center(xh)))
             * abs(model.coefficient_a(xh) - model.coefficient_a(x))
             + lipschitz * abs(model.center(xh) - model.center(x))),
            (abs(f(model, u, v, x, yh) - f(model, u, v, x, y)),
             model.r_modulus(min(v, model.center(yh)))
             * abs(model.coefficient_a(yh) - model.coefficient_a(y))
             + lipschitz * abs(model.center(yh) - model.center(y))),
        )
        violations += sum(
            1 for lhs, rhs in pairs if lhs > rhs + FLUX_CONTINUITY_TOL
        )
    return violations


@dataclass
class DiagnosticsReport:
    """Per-run record of every enabled check; see to_json_dict for the schema."""

    alpha_bar: float
    state_bound: float
    lipschitz: float
    r_bar: float
    lam: float
    dt: float
    n_steps: int
    conservation_defect_max: float
    linf_violations: int
    tv_z_history: list | None
    time_continuity_lhs: list
    time_continuity_rhs: float
    entropy_residual_max: float | None
    stationarity_defect: float | None
    contraction_history: list | None
    z_increment_violations: int | None
    flux_continuity_violations: int | None
    violations: list = field(default_factory=list)

    def to_json_dict(self):
        return {
            "schema": "discflux-report-v1",
            "alpha_bar": self.alpha_bar,
            "state_bound": self.state_bound,
            "lipschitz": self.lipschitz,
            "r_bar": self.r_bar,
            "lambda": self.lam,
            "dt": self.dt,
            "n_steps": self.n_steps,
            "conservation_defect_max": self.conservation_defect_max,
            "linf_violations": self.linf_violations,
            "tv_z_history": self.tv_z_history,
            "time_continuity_lhs": self.time_continuity_lhs,
            "time_continuity_rhs": self.time_continuity_rhs,
            "entropy_residual_max": self.entropy_residual_max,
            "stationarity_defect": self.stationarity_defect,
            "contraction_history": self.contraction_history,
            "z_increment_violations": self.z_increment_violations,
            "flux_continuity_violations": self.flux_continuity_violations,
            "violations": self.violations,
        }


def run_with_diagnostics(model, grid, u0, *, partner_u0=None,
                         stationary_profile=None, output_times=None,
                         record_all=False, **collector_options):
    """Run the scheme with a full diagnostics pass attached.

    ``partner_u0`` enables the paired-run contraction history and forces
    per-level recording on both runs; the shared time step ratio is the
    stricter of the two stability limits. ``stationary_profile`` is an
    (alpha, branch) pair identifying the datum as a level-set profile, which
    adds the stationarity-defect measurement. Remaining keyword options go to
    :class:`DiagnosticsCollector`. Returns (RunResult, DiagnosticsReport).
    """
    import dataclasses

    _, abar, m_bound, lip, lam = scheme.resolve_constants(model, grid, u0)
    record_all = record_all or partner_u0 is not None
    if partner_u0 is not None and grid.lam is None:
        _, _, _, _, lam_partner = scheme.resolve_constants(model, grid, partner_u0)
        lam = min(lam, lam_partner)
    pinned = dataclasses.replace(grid, lam=lam)

    collector = DiagnosticsCollector(
        model, grid, lam, abar, m_bound, lip, model.r_bar(m_bound),
        **collector_options,
    )
    result = scheme.run(
        model, pinned, u0, hooks=[collector],
        record_all=record_all, output_times=output_times,
    )
    contraction = None
    if partner_u0 is not None:
        partner = scheme.run(model, pinned, partner_u0, record_all=True)
        contraction = contraction_history(result, partner)
    stationarity = None
    if stationary_profile is not None:
        alpha, branch = stationary_profile
        stationarity = (
            float(np.max(np.abs(result.final.values - result.initial.values)))
            if result.n_steps > 0
            else 0.0
        )
        # cross-check against a fresh one-step probe with the run's lambda
        probe = stationarity_defect(model, grid, alpha, branch, lam=lam)
        stationarity = max(stationarity, probe)
    report = collector.finalize(
        result, stationarity=stationarity, contraction=contraction
    )
    return result, report


class DiagnosticsCollector:
    """Step hook that accumulates the per-run diagnostics.

    Create it with the resolved run constants, pass it to :func:`scheme.run`
    via ``hooks``, then call :meth:`finalize` with the run result.
    """

    def __init__(self, model, grid, lam, alpha_bar, m_bound, lipschitz, r_bar,
                 *, entropy_alpha_count=DEFAULT_ENTROPY_ALPHAS,
                 check_entropy=True, check_conservation=True,
                 check_invariant_region=True, check_time_continuity=True,
                 check_z_increment=False, track_tv=True,
                 check_flux_continuity=True, seed=0):
        self.model = model
        self.grid = grid
        self.lam = lam
        self.alpha_bar = alpha_bar
        self.m_bound = m_bound
        self.lipschitz = lipschitz
        self.r_bar_value = r_bar
        self.check_entropy = check_entropy
        self.check_conservation = check_conservation
        self.check_invariant_region = check_invariant_region
        self.check_time_continuity = check_time_continuity
        self.check_z_increment = check_z_increment
        self.track_tv = track_tv
        self.check_flux_continuity = check_flux_continuity
        self.seed = seed

        x = grid.cell_centers()
        if alpha_bar > 0 and entropy_alpha_count > 1:
            alphas = np.linspace(0.0, alpha_bar, entropy_alpha_count)
        else:
            alphas = np.array([0.0])
        self.entropy_profiles = [
            (alpha, branch, model.k_profile(alpha, branch, x))
            for alpha in alphas
            for branch in ("plus", "minus")
        ]
        self.k_lower = model.k_profile(alpha_bar, "minus", x)
        self.k_upper = model.k_profile(alpha_bar, "plus", x)

        self._started = False
        self._sum0 = 0.0
        self.conservation_defect_max = 0.0
        self.linf_violations = 0
        self.tv_z_history = [] if track_tv else None
        self.time_continuity_lhs = []
        self.entropy_residual_max = -np.inf if check_entropy else None
        self.z_increment_violations = 0 if check_z_increment else None

    def _start(self, values):
        self._sum0 = float(np.sum(values))
        self._record_level(values)
        self._started = True

    def _record_level(self, values):
        if self.track_tv:
            z = transform_to_z(self.model, self.grid, values)
            self.tv_z_history.append(total_variation(z))
        if self.check_invariant_region:
            bad = (values < self.k_lower - INVARIANT_TOL) | (
                values > self.k_upper + INVARIANT_TOL
            )
            self.linf_violations += int(np.count_nonzero(bad))
        if self.check_conservation:
            drift = abs(float(np.sum(values)) - self._sum0)
            if drift > self.conservation_defect_max:
                self.conservation_defect_max = drift

    def __call__(self, level, time, previous, current):
        if not self._started:
            self._start(previous)
        if self.check_time_continuity:
            self.time_continuity_lhs.append(
                float(np.sum(np.abs(current - previous)))
            )
        if self.check_entropy:
            for alpha, branch, k in self.entropy_profiles:
                flux = entropy_flux(self.model, self.grid, previous, k)
                residual = (
                    np.abs(current - k)
                    - np.abs(previous - k)
                    + self.lam * (flux[1:] - flux[:-1])
                )
                worst = float(np.max(residual))
                if worst > self.entropy_residual_max:
                    self.entropy_residual_max = worst
        if self.check_z_increment:
            ok, _, _ = z_increment_bound_check(
                self.model, self.grid, self.lam, previous,
                self.m_bound, self.r_bar_value, self.lipschitz,
            )
            if not ok:
                self.z_increment_violations += 1
        self._record_level(current)

    def finalize(self, result, stationarity=None, contraction=None):
        """Assemble the report; pass the RunResult the hooks observed."""
        if not self._started:
            self._start(result.initial.values)
        rhs = time_continuity_rhs(
            self.lam, self.r_bar_value, self.lipschitz,
            self.model.coefficient.total_variation,
            result.tv_initial,
            self.model.center.total_variation,
        )
        flux_violations = None
        if self.check_flux_continuity:
            rng = np.random.default_rng(self.seed)
            flux_violations = sample_flux_continuity(
                self.model, self.m_bound, self.lipschitz, rng
            )

        violations = []
        if (
            self.entropy_residual_max is not None
            and self.entropy_residual_max > ENTROPY_TOL
        ):
            violations.append("discrete_entropy_inequality")
        if self.check_invariant_region and self.linf_violations > 0:
            violations.append("invariant_region")
        if self.check_conservation:
            allowed = CONSERVATION_FACTOR * result.grid.n_cells * max(
                self.m_bound, 1.0
            )
            if self.conservation_defect_max > allowed:
                violations.append("mass_conservation")
        if self.check_time_continuity and any(
            lhs > rhs + TIME_CONTINUITY_TOL for lhs in self.time_continuity_lhs
        ):
            violations.append("time_continuity")
        if self.z_increment_violations:
            violations.append("transformed_increment_bound")
        if flux_violations:
            violations.append("interface_flux_continuity")
        if stationarity is not None and stationarity > STATIONARITY_TOL:
            violations.append("stationary_profile")
        if contraction is not None:
            diffs = np.diff(np.asarray(contraction))
            if np.any(diffs > CONTRACTION_SLACK):
                violations.append("l1_contraction")

        entropy_max = self.entropy_residual_max
        if entropy_max is not None and not np.isfinite(entropy_max):
            entropy_max = 0.0
        return DiagnosticsReport(
            alpha_bar=self.alpha_bar,
            state_bound=self.m_bound,
            lipschitz=self.lipschitz,
            r_bar=self.r_bar_value,
            lam=self.lam,
            dt=self.lam * self.grid.dx,
            n_steps=result.n_steps,
            conservation_defect_max=self.conservation_defect_max,
            linf_violations=self.linf_violations,
            tv_z_history=self.tv_z_history,
            time_continuity_lhs=self.time_continuity_lhs,
            time_continuity_rhs=rhs,
            entropy_residual_max=entropy_max,
            stationarity_defect=stationarity,
            contraction_history=(
                list(map(float, contraction)) if contraction is not None else None
            ),
            z_increment_violations=self.z_increment_violations,
            flux_continuity_violations=flux_violations,
            violations=violations,
        )
