"""Mesh-refinement studies against a fine-grid reference run."""

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import scheme
from .errors import AlignmentError, ConfigError, GridMismatchError
from .scheme import GridSpec, StateSnapshot


@dataclass(frozen=True)
class StudyConfig:
    """Nested-grid self-convergence study.

    Grids have base_cells * 2**k cells for k = 0 .. n_refinements - 1; the
    reference uses reference_factor times the finest grid. ``lam`` is shared
    by every run (None derives it from the coarsest-grid data and keeps it
    fixed); errors are L1 over ``error_region`` at the common final time.
    """

    model: object
    u0: object
    x_left: float
    x_right: float
    t_final: float
    base_cells: int
    n_refinements: int
    reference_factor: int = 16
    lam: float | None = None
    error_region: tuple | None = None

    def __post_init__(self):
        if self.base_cells < 16:
            raise ConfigError("base_cells must be at least 16")
        if self.n_refinements < 2:
            raise ConfigError("n_refinements must be at least 2")
        rf = self.reference_factor
        if rf < 4 or rf & (rf - 1):
            raise ConfigError("reference_factor must be a power of 2, >= 4")
        if self.error_region is not None:
            lo, hi = self.error_region
            if not (self.x_left < lo < hi < self.x_right):
                raise ConfigError("error_region must lie strictly inside the domain")

    def cell_counts(self):
        return [self.base_cells * 2**k for k in range(self.n_refinements)]


def restrict(fine, factor):
    """Conservative restriction: each coarse cell is the mean of its children."""
    factor = int(factor)
    if factor < 1:
        raise AlignmentError("factor must be a positive integer")
    values = fine.values if isinstance(fine, StateSnapshot) else np.asarray(fine, float)
    if values.shape[0] % factor:
        raise AlignmentError(
            f"{values.shape[0]} fine cells do not divide into groups of {factor}"
        )
    coarse = values.reshape(-1, factor).mean(axis=1)
    if isinstance(fine, StateSnapshot):
        return StateSnapshot(fine.time, coarse)
    return coarse


def l1_error(a, b, grid, region=None):
    """dx-weighted L1 distance, optionally restricted to a sub-interval."""
    av = a.values if isinstance(a, StateSnapshot) else np.asarray(a, float)
    bv = b.values if isinstance(b, StateSnapshot) else np.asarray(b, float)
    if av.shape != bv.shape or av.shape[0] != grid.n_cells:
        raise GridMismatchError("states do not share the grid")
    diff = np.abs(av - bv)
    if region is not None:
        lo, hi = region
        x = grid.cell_centers()
        diff = diff[(x >= lo) & (x <= hi)]
    return float(np.sum(diff) * grid.dx)


@dataclass
class StudyRow:
    n_cells: int
    dx: float
    dt: float
    error: float
    order: float  # nan on the coarsest row


@dataclass
class StudyResult:
    rows: list
    reference_cells: int
    lam: float
    final_time: float

    @property
    def errors(self):
        return [row.error for row in self.rows]

    @property
    def errors_decreasing(self):
        e = self.errors
        return all(e[i + 1] < e[i] for i in range(len(e) - 1))

    def error_ratios(self):
        e = self.errors
        return [e[i + 1] / e[i] for i in range(len(e) - 1)]


def refinement_study(cfg, jobs=1):
    """Run the study, optionally fanning the grids out to worker processes."""
    lam = cfg.lam
    if lam is None:
        abar = scheme.alpha_bar_exact(cfg.model, cfg.u0)
        lam = scheme.cfl_lambda(cfg.model, cfg.model.invariant_bound(abar))

    # land every grid on the same physical time by fixing the coarse step
    # count and scaling it with the grid
    dx_base = (cfg.x_right - cfg.x_left) / cfg.base_cells
    steps_base = max(1, round(cfg.t_final / (lam * dx_base)))

    counts = cfg.cell_counts()
    ref_cells = counts[-1] * cfg.reference_factor
    specs = []
    for n in counts + [ref_cells]:
        scale = n // cfg.base_cells
        specs.append((dataclasses.replace(cfg, lam=lam), n, steps_base * scale))
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_single_grid, specs))
    else:
        results = [run_single_grid(spec) for spec in specs]
    reference = results[-1]

    rows = []
    prev_error = None
    for (n, result) in zip(counts, results[:-1]):
        grid = result.grid
        ref_on_grid = restrict(reference.final, ref_cells // n)
        err = l1_error(result.final, ref_on_grid, grid, cfg.error_region)
        order = float("nan") if prev_error is None else float(
            np.log2(prev_error / err)
        )
        rows.append(StudyRow(n, grid.dx, result.dt, err, order))
        prev_error = err
    return StudyResult(
        rows=rows,
        reference_cells=ref_cells,
        lam=lam,
        final_time=reference.final_time,
    )


def run_single_grid(spec):
    """Worker for one study grid; module-level so it can cross processes."""
    cfg, n_cells, n_steps = spec
    grid = GridSpec(cfg.x_left, cfg.x_right, n_cells, cfg.t_final, lam=None)
    lam = cfg.lam
    if lam is None:
        abar = scheme.alpha_bar_exact(cfg.model, cfg.u0)
        lam = scheme.cfl_lambda(cfg.model, cfg.model.invariant_bound(abar))
    grid = dataclasses.replace(grid, lam=lam)
    return scheme.run(cfg.model, grid, cfg.u0, n_steps=n_steps)
