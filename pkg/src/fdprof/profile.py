"""Stitched profile representation shared by the solvers and the checks.

A Profile concatenates the Picard region (thinned to roughly 1% radial
spacing) with the accepted steps of the outward integration.  Nodes carry
value, derivative, flux P = r^{n-1} v^{m-1} v_r and the flux derivative, so
dense evaluation is C1 cubic Hermite and never re-differences values.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .params import ProfileParams


class ProfileKind(enum.Enum):
    ORIGIN = "origin"       # f-problem: f(0) = eta0, f_r(0) = 0
    FARFIELD = "farfield"   # g-problem: g(0) = eta, samples are g(r)


class TerminalEvent(enum.Enum):
    REACHED_RMAX = "ReachedRmax"
    VALUE_FLOOR = "ValueFloor"
    DERIV_BLOWUP = "DerivBlowup"
    STEP_UNDERFLOW = "StepUnderflow"


def hermite_many(rs, ys, dys, x):
    """Piecewise cubic Hermite through (rs, ys) with nodal slopes dys."""
    x = np.asarray(x, dtype=np.float64)
    idx = np.clip(np.searchsorted(rs, x) - 1, 0, len(rs) - 2)
    r0, r1 = rs[idx], rs[idx + 1]
    h = r1 - r0
    t = np.clip((x - r0) / h, 0.0, 1.0)
    u = 1.0 - t
    return (u * u * (1.0 + 2.0 * t) * ys[idx] + t * u * u * h * dys[idx]
            + t * t * (3.0 - 2.0 * t) * ys[idx + 1] + t * t * (t - 1.0) * h * dys[idx + 1])


@dataclass(frozen=True)
class Profile:
    kind: ProfileKind
    params: ProfileParams
    boundary: float               # eta0 for ORIGIN, eta for FARFIELD
    r: np.ndarray                 # strictly increasing, > 0
    v: np.ndarray
    vr: np.ndarray
    flux: np.ndarray
    dflux: np.ndarray
    eps: float                    # Picard/integration seam radius
    n_local: int                  # nodes taken from the Picard region
    terminal: TerminalEvent
    tol: float
    step_errors: np.ndarray = field(repr=False, default=None)

    @property
    def r_end(self) -> float:
        return float(self.r[-1])

    def system_coefficients(self):
        """(weight exponent w, A, B) of the flux equation P' = -r^w (A v + B r v_r)."""
        p = self.params
        if self.kind is ProfileKind.ORIGIN:
            return p.n - 1.0, p.alpha, p.beta
        return p.n + p.sigma - 3.0, p.alpha_tilde, p.beta_tilde

    def value_at(self, x):
        return hermite_many(self.r, self.v, self.vr, x)

    def deriv_at(self, x):
        # v_r recovered through the flux relation keeps derivative evaluation
        # consistent with the stored state
        P = hermite_many(self.r, self.flux, self.dflux, x)
        v = self.value_at(x)
        n1 = self.params.n - 1
        return v ** (1.0 - self.params.m) * P / np.asarray(x, dtype=float) ** n1

    def in_range(self, x) -> bool:
        return bool(np.all((x >= self.r[0]) & (x <= self.r[-1])))


def thin_local_nodes(grid: np.ndarray, gamma: float,
                     min_ratio: float = 1.01,
                     lead: float = 2739.0) -> np.ndarray:
    """Indices of Picard nodes suitable as profile nodes.

    The trapezoid construction of the local solution is consistent with the
    flux equation to ~(gamma/j)^2 relative at grid index j, times a constant
    set by the curvature of the integrand on the graded grid.  Nodes below
    index lead*gamma cannot support residual checks near the 1e-7 level and
    are dropped; lead absorbs the per-problem constant.  The rest is thinned
    to a roughly geometric set with neighbor ratio >= min_ratio.
    """
    J = len(grid)
    j0 = int(np.ceil(lead * gamma))
    if j0 >= J // 2:
        j0 = max(1, J // 2)
    keep = [j0]
    last = grid[j0]
    for j in range(j0 + 1, J - 1):
        if grid[j] >= last * min_ratio:
            keep.append(j)
            last = grid[j]
    return np.array(keep, dtype=np.intp)
