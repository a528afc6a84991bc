"""Reference computations used to certify solver output.

Everything here answers questions about the operator itself, never
about the iteration: regularized solutions (points of the Tikhonov
path), resolvents, Yosida approximations, the resolvent path sampled at
the origin, and a brute-force minimum-norm-zero search.  None of it is
called from the solver loop, and none of it shares numerical machinery
with the solver: closed forms come from operator metadata, everything
else goes through an independent root finder.  That independence is the
point; a certificate checked against the same arithmetic that produced
it certifies nothing.

Residuals are measured with :meth:`MonotoneMap.inclusion_residual`, so
resolvent outputs that land exactly on a kink of a multivalued operator
are still recognized as solutions of the inclusion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.optimize

from .operators import MonotoneMap

__all__ = [
    "OracleError",
    "RegularizedSolution",
    "ResolventPath",
    "ORACLE_TOL",
    "regularized_solution",
    "resolvent",
    "yosida",
    "resolvent_zero_path",
    "min_norm_zero_search",
]

ORACLE_TOL = 1e-9

# evaluation budget for the damped fallback before declaring failure
_FALLBACK_BUDGET = 10**6


class OracleError(RuntimeError):
    """Reference computation failed to reach its residual tolerance.

    This flags broken test infrastructure (or an operator outside the
    oracle's reach), never a property of the solver under test.
    """


@dataclass(frozen=True)
class RegularizedSolution:
    """Solution of theta*p + A(p) = 0 for one weight theta.

    ``residual`` is the distance from -theta*p to the operator's value
    set at p; at most ORACLE_TOL * (1 + |p|) by construction.
    """

    theta: float
    point: np.ndarray
    residual: float
    mu: Optional[int] = None


@dataclass(frozen=True)
class ResolventPath:
    """Resolvent of the origin sampled along an increasing lambda grid.

    ``points[i]`` is J_{lambda_i}(0) and ``scaled[i] = points[i] / lambda_i``.
    As lambda grows, points approach the minimum-norm zero when one
    exists (and blow up otherwise), while scaled approaches minus the
    minimum-norm element of the closure of the range.
    """

    lambdas: np.ndarray
    points: np.ndarray
    scaled: np.ndarray

    def __len__(self) -> int:
        return len(self.lambdas)


def _residual(op: MonotoneMap, lam: float, x: np.ndarray, w: np.ndarray) -> float:
    # distance certifying  x + lam * A(x) ∋ w
    return lam * op.inclusion_residual(x, (w - x) / lam)


def _damped_root(op: MonotoneMap, lam: float, w: np.ndarray) -> np.ndarray:
    """Fallback solve of x + lam*A(x) = w by damped fixed-point steps.

    The map G(x) = x + lam*A(x) - w is strongly monotone with modulus 1,
    so x - gamma*G(x) contracts toward the solution for small enough
    gamma; the loop adapts gamma by halving on residual increase.
    """
    x = w.copy()
    g = x + lam * op(x) - w
    gn = float(np.linalg.norm(g))
    gamma = 0.5
    evals = 1
    target = ORACLE_TOL * 0.5 * (1.0 + float(np.linalg.norm(x)))
    while gn > target and evals < _FALLBACK_BUDGET:
        x_new = x - gamma * g
        g_new = x_new + lam * op(x_new) - w
        gn_new = float(np.linalg.norm(g_new))
        evals += 1
        if gn_new <= gn * (1.0 - 0.1 * gamma) + 1e-300:
            x, g, gn = x_new, g_new, gn_new
            gamma = min(gamma * 1.1, 1.0)
        else:
            gamma *= 0.5
            if gamma < 1e-12:
                break
    if gn > target:
        raise OracleError(
            f"damped resolvent iteration stalled at residual {gn:g} "
            f"(lambda={lam:g}, operator {op.name})"
        )
    return x


def resolvent(op: MonotoneMap, lam: float, w) -> np.ndarray:
    """J_lam(w): the unique x with x + lam*A(x) ∋ w.

    Uses the operator's closed form when present, otherwise an
    independent root finder (the equation is strongly monotone with
    modulus 1, so it is well conditioned for any lam > 0).  The result
    is always verified against the inclusion residual.
    """
    if lam <= 0:
        raise ValueError("resolvent parameter must be positive")
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape[0] != op.dim:
        raise ValueError(f"w has dim {w.shape[0]}, operator expects {op.dim}")

    if op.resolvent_fn is not None:
        x = np.asarray(op.resolvent_fn(lam, w), dtype=float)
        res = _residual(op, lam, x, w)
        if res > ORACLE_TOL * (1.0 + float(np.linalg.norm(x))):
            raise OracleError(
                f"closed-form resolvent of {op.name} violates its own identity "
                f"(residual {res:g} at lambda={lam:g})"
            )
        return x

    sol = scipy.optimize.root(
        lambda x: x + lam * op(x) - w, w, method="hybr", tol=1e-12
    )
    x = np.asarray(sol.x, dtype=float)
    if _residual(op, lam, x, w) > ORACLE_TOL * (1.0 + float(np.linalg.norm(x))):
        x = _damped_root(op, lam, w)
    res = _residual(op, lam, x, w)
    if res > ORACLE_TOL * (1.0 + float(np.linalg.norm(x))):
        raise OracleError(
            f"resolvent of {op.name} unresolved (residual {res:g} at lambda={lam:g})"
        )
    return x


def regularized_solution(op: MonotoneMap, theta: float, mu: Optional[int] = None) -> RegularizedSolution:
    """Point of the regularization path: the unique p with theta*p + A(p) ∋ 0.

    Equivalent to the resolvent of the origin at lambda = 1/theta.  The
    equation is strongly monotone with modulus >= theta, so p exists and
    is unique for every theta > 0.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    p = resolvent(op, 1.0 / theta, np.zeros(op.dim))
    res = op.inclusion_residual(p, -theta * p)
    if res > ORACLE_TOL * (1.0 + float(np.linalg.norm(p))):
        raise OracleError(
            f"regularized solution of {op.name} unresolved "
            f"(residual {res:g} at theta={theta:g})"
        )
    return RegularizedSolution(theta=theta, point=p, residual=res, mu=mu)


def yosida(op: MonotoneMap, lam: float, x) -> np.ndarray:
    """Yosida approximation (x - J_lam(x)) / lam, a Lipschitz surrogate for A."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return (x - resolvent(op, lam, x)) / lam


def resolvent_zero_path(op: MonotoneMap, lambdas) -> ResolventPath:
    """Sample J_lambda(0) and J_lambda(0)/lambda along a lambda grid.

    The grid must be strictly increasing and span at least four decades,
    wide enough for the tail to witness the limits the path is meant to
    exhibit.
    """
    lambdas = np.asarray(lambdas, dtype=float).reshape(-1)
    if len(lambdas) < 2 or not (np.diff(lambdas) > 0).all():
        raise ValueError("lambda grid must be strictly increasing")
    if lambdas[0] <= 0:
        raise ValueError("lambda grid must be positive")
    if lambdas[-1] / lambdas[0] < 1e4:
        raise ValueError("lambda grid must span at least four decades")
    origin = np.zeros(op.dim)
    points = np.empty((len(lambdas), op.dim))
    for i, lam in enumerate(lambdas):
        points[i] = resolvent(op, float(lam), origin)
    scaled = points / lambdas[:, None]
    return ResolventPath(lambdas=lambdas, points=points, scaled=scaled)


def _grid_eval(op: MonotoneMap, axes: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.empty(pts.shape[0])
    for i, p in enumerate(pts):
        vals[i] = np.linalg.norm(op(p))
    return pts, vals


def min_norm_zero_search(
    op: MonotoneMap,
    low,
    high,
    resolution: int = 21,
    rounds: int = 6,
) -> Optional[np.ndarray]:
    """Brute-force the norm-minimal near-zero of |A| over a box, or None.

    Grid scan plus local refinement, feasible for dim <= 3.  Each round
    estimates a Lipschitz constant for |A| from the grid itself and
    keeps points whose value could plausibly hide a zero within one
    cell; among those the norm-minimal point seeds the next, finer
    round.  Returns None when the final value cannot be attributed to
    grid coarseness, i.e. |A| stays bounded away from zero.

    This is validation machinery for catalog metadata: it assumes |A|
    grows at least linearly off its zero set inside the box, which holds
    for every catalog family.
    """
    if op.dim > 3:
        raise ValueError("brute-force search is limited to dim <= 3")
    low = np.broadcast_to(np.asarray(low, float), (op.dim,)).copy()
    high = np.broadcast_to(np.asarray(high, float), (op.dim,)).copy()
    if not (high > low).all():
        raise ValueError("empty search box")
    lo, hi = low.copy(), high.copy()

    best: Optional[np.ndarray] = None
    spacing = (hi - lo) / (resolution - 1)
    lipschitz = 0.0
    for _ in range(rounds):
        axes = [np.linspace(lo[i], hi[i], resolution) for i in range(op.dim)]
        spacing = (hi - lo) / (resolution - 1)
        pts, vals = _grid_eval(op, axes)
        shaped = vals.reshape((resolution,) * op.dim)
        lipschitz = 0.0
        for axis in range(op.dim):
            steps = np.abs(np.diff(shaped, axis=axis))
            if steps.size:
                lipschitz = max(lipschitz, float(steps.max()) / spacing[axis])
        vmin = float(vals.min())
        keep = vals <= vmin + lipschitz * float(spacing.max()) + 1e-12
        candidates = pts[keep]
        norms = np.linalg.norm(candidates, axis=1)
        best = candidates[int(np.argmin(norms))]
        # refine around the norm-minimal candidate, staying in the box
        half = 2.0 * spacing
        lo = np.maximum(low, best - half)
        hi = np.minimum(high, best + half)

    final_val = float(np.linalg.norm(op(best)))
    accept = max(1e-9, 4.0 * lipschitz * float(spacing.max()))
    if final_val > accept:
        return None
    return best
