"""Unimodal flux families with piecewise-constant spatial dependence.

Every built-in family evaluates cellwise as ``A(u, x) = s(x) * (u - m(x))**2``
where the scale ``s(x) >= eps > 0`` and the critical point ``m(x)`` are
piecewise-constant BV functions. On top of that form the model exposes the
derived objects the solver and diagnostics need: the spatial modulus pair
(a, R), the coercivity envelope, Lipschitz bounds, the increasing transform
of the state, and the level-set profiles that are exact steady states of the
scheme.
"""

import numpy as np

from .coefficients import PiecewiseCoefficient
from .errors import ConfigError, DomainError, RootBracketError

QUADRATIC_SCALED = "quadratic_scaled"
SHIFTED_PARABOLA = "shifted_parabola"
TWO_FLUX = "two_flux"

FAMILIES = (QUADRATIC_SCALED, SHIFTED_PARABOLA, TWO_FLUX)

#: absolute residual tolerance for bisection root solves
ROOT_TOL = 1e-12
ROOT_MAX_ITER = 200
BRACKET_MAX_EXPANSIONS = 60


def _as_coefficient(obj):
    if isinstance(obj, PiecewiseCoefficient):
        return obj
    return PiecewiseCoefficient.constant(float(obj))


class FluxModel:
    """A flux family together with all its derived objects.

    Use the constructors :func:`quadratic_scaled`, :func:`shifted_parabola`
    and :func:`two_flux` instead of instantiating directly.
    """

    def __init__(self, family, scale, center, coefficient, branch_params=None):
        if family not in FAMILIES:
            raise ConfigError(f"unknown flux family {family!r}")
        self.family = family
        self.scale = scale
        self.center = center
        self.coefficient = coefficient
        self.branch_params = branch_params
        if scale.min_value <= 0.0:
            raise ConfigError("flux scale must be strictly positive")

    # -- pointwise evaluation ------------------------------------------------

    def eval_flux(self, u, x):
        """A(u, x); accepts scalars or broadcastable arrays."""
        s = self.scale(x)
        m = self.center(x)
        d = np.asarray(u, dtype=float) - m
        out = s * d * d
        if np.ndim(out) == 0:
            return float(out)
        return out

    def flux_slope(self, u, x):
        """dA/du at (u, x)."""
        s = self.scale(x)
        m = self.center(x)
        out = 2.0 * s * (np.asarray(u, dtype=float) - m)
        if np.ndim(out) == 0:
            return float(out)
        return out

    def critical_point(self, x):
        """Location of the flux minimum, right-continuous at jumps."""
        return self.center(x)

    def coefficient_a(self, x):
        """The BV function a(x) of the spatial modulus pair."""
        return self.coefficient(x)

    def r_modulus(self, u):
        """R(u) such that |A(u,x) - A(u,y)| <= R(u)|a(x) - a(y)|."""
        u = np.asarray(u, dtype=float)
        if self.family == QUADRATIC_SCALED:
            out = u * u
        elif self.family == SHIFTED_PARABOLA:
            out = 2.0 * (np.abs(u) + self.center.max_abs)
        else:
            (sl, ml), (sr, mr) = self.branch_params
            out = np.maximum(sl * (u - ml) ** 2, sr * (u - mr) ** 2)
        if np.ndim(out) == 0:
            return float(out)
        return out

    def r_bar(self, m_bound):
        """sup of R over |u| <= m_bound (R is even-ish and increasing in |u|)."""
        m_bound = float(m_bound)
        if self.family == QUADRATIC_SCALED:
            return m_bound * m_bound
        if self.family == SHIFTED_PARABOLA:
            return 2.0 * (m_bound + self.center.max_abs)
        (sl, ml), (sr, mr) = self.branch_params
        return max(sl * (m_bound + abs(ml)) ** 2, sr * (m_bound + abs(mr)) ** 2)

    # -- coercivity envelope ---------------------------------------------------

    @property
    def envelope_coefficient(self):
        # A(u,x) = s(x)(u-m)^2 >= (min s)(u-m)^2 everywhere
        return self.scale.min_value

    def gamma(self, s):
        s = np.asarray(s, dtype=float)
        out = self.envelope_coefficient * s * s
        if np.ndim(out) == 0:
            return float(out)
        return out

    def gamma_inv(self, y):
        y = np.asarray(y, dtype=float)
        out = np.sqrt(y / self.envelope_coefficient)
        if np.ndim(out) == 0:
            return float(out)
        return out

    # -- global bounds over all pieces ----------------------------------------

    def _piece_table(self):
        """Merged (scale, center) values, one row per spatial piece."""
        reps = np.union1d(
            self.scale.piece_representatives(), self.center.piece_representatives()
        )
        return self.scale(reps), self.center(reps)

    def lipschitz_bound(self, m_bound):
        """sup over x of sup_{|u| <= m_bound} |dA/du|."""
        if m_bound < 0:
            raise DomainError("state magnitude bound must be nonnegative")
        s, m = self._piece_table()
        return float(np.max(2.0 * s * (m_bound + np.abs(m))))

    def invariant_bound(self, alpha):
        """Largest |k| over both level-set branches A(k, x) = alpha."""
        if alpha < 0:
            raise DomainError("alpha must be nonnegative")
        s, m = self._piece_table()
        return float(np.max(np.abs(m) + np.sqrt(alpha / s)))

    def activity_breakpoints(self):
        """All spatial jump locations of the flux coefficients."""
        return np.union1d(self.scale.breakpoints, self.center.breakpoints)

    # -- increasing transform of the state ------------------------------------

    def singular_map(self, u, x):
        """sgn(u - m(x)) * A(u, x); strictly increasing in u."""
        s = self.scale(x)
        m = self.center(x)
        d = np.asarray(u, dtype=float) - m
        out = s * d * np.abs(d)
        if np.ndim(out) == 0:
            return float(out)
        return out

    def inverse_singular_map(self, z, x, method="closed_form"):
        """The unique u with singular_map(u, x) = z."""
        if method == "closed_form":
            s = self.scale(x)
            m = self.center(x)
            z = np.asarray(z, dtype=float)
            out = m + np.sign(z) * np.sqrt(np.abs(z) / s)
            if np.ndim(out) == 0:
                return float(out)
            return out
        if method == "bisect":
            return self._inverse_singular_bisect(float(z), x)
        raise ValueError(f"unknown method {method!r}")

    def _inverse_singular_bisect(self, z, x):
        m = self.center(x)
        if z == 0.0:
            return m
        half = self.gamma_inv(abs(z))
        lo, hi = (m, m + half) if z > 0 else (m - half, m)
        f = lambda u: self.singular_map(u, x) - z
        lo, hi = _expand_bracket(f, lo, hi)
        return _bisect(f, lo, hi)

    # -- level-set profiles ----------------------------------------------------

    def solve_k_alpha(self, alpha, branch, x, method="closed_form"):
        """The root k of A(k, x) = alpha on the requested side of m(x).

        ``branch`` is "plus" (k >= m) or "minus" (k <= m). The closed form is
        exact for the built-in families; ``method="bisect"`` exercises the
        generic monotone solve with the coercivity bracket.
        """
        if alpha < 0:
            raise DomainError("alpha must be nonnegative")
        if branch not in ("plus", "minus"):
            raise ValueError(f"branch must be 'plus' or 'minus', got {branch!r}")
        sgn = 1.0 if branch == "plus" else -1.0
        if method == "closed_form":
            s = self.scale(x)
            m = self.center(x)
            out = m + sgn * np.sqrt(alpha / s)
            if np.ndim(out) == 0:
                return float(out)
            return out
        if method == "bisect":
            m = self.center(x)
            if alpha == 0.0:
                return m
            half = self.gamma_inv(alpha)
            lo, hi = (m, m + half) if branch == "plus" else (m - half, m)
            # on the bracket f(m) = -alpha < 0 and coercivity makes f >= 0 at
            # the far end, with f monotone along the branch
            f = lambda k: self.eval_flux(k, x) - alpha
            return _bisect(f, lo, hi, increasing=(branch == "plus"))
        raise ValueError(f"unknown method {method!r}")

    def k_profile(self, alpha, branch, x):
        """Vectorized solve_k_alpha over an array of positions."""
        return self.solve_k_alpha(alpha, branch, np.asarray(x, dtype=float))

    def __repr__(self):
        return f"FluxModel(family={self.family!r})"


def _expand_bracket(f, lo, hi, max_expansions=BRACKET_MAX_EXPANSIONS):
    """Grow [lo, hi] geometrically until f changes sign across it."""
    flo, fhi = f(lo), f(hi)
    width = max(hi - lo, 1e-8)
    for _ in range(max_expansions):
        if flo == 0.0 or fhi == 0.0 or (flo < 0.0) != (fhi < 0.0):
            return lo, hi
        width *= 2.0
        lo, hi = lo - width, hi + width
        flo, fhi = f(lo), f(hi)
    raise RootBracketError("could not bracket a sign change")


def _bisect(f, lo, hi, tol=ROOT_TOL, max_iter=ROOT_MAX_ITER, increasing=True):
    """Bisection for monotone f on [lo, hi], stopping on |f| <= tol."""
    a, b = lo, hi
    mid = 0.5 * (a + b)
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        fm = f(mid)
        if abs(fm) <= tol:
            break
        if (fm < 0.0) == increasing:
            a = mid
        else:
            b = mid
    return mid


# -- constructors ---------------------------------------------------------------


def quadratic_scaled(scale, epsilon=None):
    """Flux s(x) * u**2 with critical point 0; ``scale`` must stay positive."""
    s = _as_coefficient(scale)
    if epsilon is not None:
        if epsilon <= 0.0:
            raise ConfigError("epsilon floor must be positive")
        if s.min_value < epsilon:
            raise ConfigError(
                f"scale dips to {s.min_value} below the declared floor {epsilon}"
            )
    elif s.min_value <= 0.0:
        raise ConfigError("scale must be strictly positive everywhere")
    center = PiecewiseCoefficient.constant(0.0)
    return FluxModel(QUADRATIC_SCALED, s, center, coefficient=s)


def shifted_parabola(critical_point):
    """Flux (u - m(x))**2 with piecewise-constant critical point m."""
    m = _as_coefficient(critical_point)
    scale = PiecewiseCoefficient.constant(1.0)
    # the spatial dependence lives entirely in the critical point, so the
    # modulus pair uses a = m with R(u) = 2(|u| + max|m|)
    return FluxModel(SHIFTED_PARABOLA, scale, m, coefficient=m)


def two_flux(left_scale, left_center, right_scale, right_center, jump_location):
    """Single-interface flux: one parabola branch left of the jump, one right."""
    if left_scale <= 0.0 or right_scale <= 0.0:
        raise ConfigError("branch scales must be strictly positive")
    x0 = float(jump_location)
    scale = PiecewiseCoefficient([x0], [left_scale, right_scale])
    center = PiecewiseCoefficient([x0], [left_center, right_center])
    # unit step at the jump: |g(u) - f(u)| <= max(g(u), f(u)) * 1
    coefficient = PiecewiseCoefficient([x0], [0.0, 1.0])
    params = ((float(left_scale), float(left_center)),
              (float(right_scale), float(right_center)))
    return FluxModel(TWO_FLUX, scale, center, coefficient, branch_params=params)
