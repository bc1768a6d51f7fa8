"""Piecewise-constant spatial coefficients of bounded variation.

A coefficient is stored as a finite list of strictly increasing breakpoints
plus one value per open interval, using the right-continuous representative:
the value *at* a breakpoint is the value of the interval to its right.
"""

import numpy as np

from .errors import ConfigError


class PiecewiseCoefficient:
    """Right-continuous step function with finitely many breakpoints.

    Parameters
    ----------
    breakpoints : 1d array-like, strictly increasing (may be empty)
    values : 1d array-like, one entry more than ``breakpoints``
    """

    __slots__ = ("breakpoints", "values")

    def __init__(self, breakpoints, values):
        bp = np.atleast_1d(np.asarray(breakpoints, dtype=float))
        vals = np.atleast_1d(np.asarray(values, dtype=float))
        if bp.size == 0:
            bp = bp.reshape(0)
        if vals.size != bp.size + 1:
            raise ConfigError(
                f"need exactly one value per interval: got {vals.size} values "
                f"for {bp.size} breakpoints"
            )
        if bp.size and not np.all(np.diff(bp) > 0.0):
            raise ConfigError("breakpoints must be strictly increasing")
        if not np.all(np.isfinite(bp)) or not np.all(np.isfinite(vals)):
            raise ConfigError("breakpoints and values must be finite")
        bp.setflags(write=False)
        vals.setflags(write=False)
        self.breakpoints = bp
        self.values = vals

    @classmethod
    def constant(cls, value):
        return cls([], [value])

    def __call__(self, x):
        """Evaluate at scalar or array ``x`` (right-continuous at jumps)."""
        idx = np.searchsorted(self.breakpoints, x, side="right")
        out = self.values[idx]
        if np.isscalar(x) or np.ndim(x) == 0:
            return float(out)
        return out

    @property
    def total_variation(self):
        if self.values.size < 2:
            return 0.0
        return float(np.sum(np.abs(np.diff(self.values))))

    @property
    def min_value(self):
        return float(np.min(self.values))

    @property
    def max_value(self):
        return float(np.max(self.values))

    @property
    def max_abs(self):
        return float(np.max(np.abs(self.values)))

    def activity_hull(self):
        """Hull of the jump locations, or None for a constant function."""
        if self.breakpoints.size == 0:
            return None
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    def piece_representatives(self):
        """One interior point per piece, for exact per-piece extrema."""
        b = self.breakpoints
        if b.size == 0:
            return np.array([0.0])
        mids = 0.5 * (b[:-1] + b[1:])
        return np.concatenate(([b[0] - 1.0], mids, [b[-1] + 1.0]))

    def integrate(self, a, b):
        """Exact integral over [a, b] (a <= b)."""
        if b < a:
            raise ValueError("integration bounds out of order")
        pts = self.breakpoints
        inner = pts[(pts > a) & (pts < b)]
        nodes = np.concatenate(([a], inner, [b]))
        seg_values = self(nodes[:-1])
        return float(np.sum(seg_values * np.diff(nodes)))

    def cell_averages(self, edges):
        """Exact averages over the cells defined by sorted ``edges``."""
        edges = np.asarray(edges, dtype=float)
        lo, hi = edges[0], edges[-1]
        inner = self.breakpoints[(self.breakpoints > lo) & (self.breakpoints < hi)]
        nodes = np.union1d(edges, inner)
        seg = self(nodes[:-1]) * np.diff(nodes)
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        at_edges = cum[np.searchsorted(nodes, edges)]
        return np.diff(at_edges) / np.diff(edges)

    def __repr__(self):
        return (
            f"PiecewiseCoefficient(breakpoints={self.breakpoints.tolist()}, "
            f"values={self.values.tolist()})"
        )


def accumulating_jumps(base=0.0, delta=0.5, count=12, alternating=True):
    """Step function whose jumps pile up geometrically toward x = 0.

    Breakpoints sit at -2^{-k} for k = 1..count and the k-th jump has size
    delta * 2^{-k}, so the total variation stays finite (< delta) while the
    jump set accumulates at the origin.
    """
    if count < 1:
        raise ConfigError("count must be at least 1")
    ks = np.arange(1, count + 1)
    breakpoints = -np.power(2.0, -ks.astype(float))
    sizes = delta * np.power(2.0, -ks.astype(float))
    if alternating:
        sizes = sizes * np.where(ks % 2 == 1, 1.0, -1.0)
    values = base + np.concatenate(([0.0], np.cumsum(sizes)))
    return PiecewiseCoefficient(breakpoints, values)
