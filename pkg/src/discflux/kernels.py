"""Hot finite-volume kernels.

Two interchangeable implementations live here: a vectorized pure-numpy path
and a loop version compiled with numba. The active path is chosen once at
import time; set ``DISCFLUX_DISABLE_NUMBA=1`` in the environment to force the
numpy fallback. Both paths produce bitwise-identical results (the test suite
checks this), so the switch only affects speed.

All kernels take the state ``u`` (n cells) plus ghost-extended coefficient
arrays ``scale_ext``/``center_ext`` of length n + 2, evaluated at the cell
centers including one ghost center on each side. Ghost *states* are constant
extrapolations of the end cells.
"""

import os

import numpy as np

_flag = os.environ.get("DISCFLUX_DISABLE_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag in {"1", "true", "yes", "on"}

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency normally
    njit = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not NUMBA_DISABLED


def extend_with_ghosts(u):
    """Append one constant-extrapolated ghost value on each side."""
    out = np.empty(u.shape[0] + 2)
    out[1:-1] = u
    out[0] = u[0]
    out[-1] = u[-1]
    return out


def interface_fluxes_numpy(u_ext, scale_ext, center_ext):
    """Godunov interface fluxes from ghost-extended data; returns n + 1 values.

    Flux i sits between cells i - 1 and i and upper-envelopes the local
    Riemann problem: max of the left flux clipped to its increasing branch
    and the right flux clipped to its decreasing branch.
    """
    d = u_ext - center_ext
    up = np.maximum(d, 0.0)
    dn = np.minimum(d, 0.0)
    a_up = scale_ext * (up * up)
    a_dn = scale_ext * (dn * dn)
    return np.maximum(a_up[:-1], a_dn[1:])


def step_numpy(u, scale_ext, center_ext, lam):
    u_ext = extend_with_ghosts(u)
    flux = interface_fluxes_numpy(u_ext, scale_ext, center_ext)
    return u - lam * (flux[1:] - flux[:-1])


def march_numpy(u, scale_ext, center_ext, lam, n_steps):
    cur = u.copy()
    for _ in range(n_steps):
        cur = step_numpy(cur, scale_ext, center_ext, lam)
    return cur


def _march_loop(u, scale_ext, center_ext, lam, n_steps):
    n = u.shape[0]
    cur = u.copy()
    nxt = np.empty(n)
    flux = np.empty(n + 1)
    for _ in range(n_steps):
        for i in range(n + 1):
            ul = cur[i - 1] if i > 0 else cur[0]
            ur = cur[i] if i < n else cur[n - 1]
            dl = ul - center_ext[i]
            if dl < 0.0:
                dl = 0.0
            dr = ur - center_ext[i + 1]
            if dr > 0.0:
                dr = 0.0
            a_up = scale_ext[i] * (dl * dl)
            a_dn = scale_ext[i + 1] * (dr * dr)
            flux[i] = a_up if a_up > a_dn else a_dn
        for j in range(n):
            nxt[j] = cur[j] - lam * (flux[j + 1] - flux[j])
        cur, nxt = nxt, cur
    return cur


if HAVE_NUMBA:
    march_numba = njit(cache=True)(_march_loop)
else:  # pragma: no cover
    march_numba = None


def godunov_step(u, scale_ext, center_ext, lam):
    """One explicit update of all cells."""
    if USE_NUMBA:
        return march_numba(u, scale_ext, center_ext, lam, 1)
    return step_numpy(u, scale_ext, center_ext, lam)


def godunov_march(u, scale_ext, center_ext, lam, n_steps):
    """n_steps explicit updates without intermediate output."""
    if USE_NUMBA:
        return march_numba(u, scale_ext, center_ext, lam, n_steps)
    return march_numpy(u, scale_ext, center_ext, lam, n_steps)


def warmup():
    """Trigger JIT compilation so later timings exclude it."""
    if USE_NUMBA:
        dummy = np.zeros(4)
        coeffs = np.ones(6)
        march_numba(dummy, coeffs, np.zeros(6), 0.1, 1)
