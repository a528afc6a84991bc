"""Catalog of convex functionals with explicit subgradient selections.

Each entry knows four things: its value, a deterministic subgradient
selection (at kinks, the minimum-norm element of the subdifferential),
its proximal map when a closed form exists, and an analytic bound for
the subgradient norm over a ball.  The selection rule is part of the
entry's definition: a solver driving these as operators must see a
single-valued map, and the minimum-norm selection keeps evaluations
bounded near kinks.

Only catalog entries (and nonnegative combinations of them) are accepted
by :func:`monozero.operators.subgradient_map`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConvexFunctional",
    "QuadraticForm",
    "ScaledNorm",
    "HuberNorm",
    "MaxCoordinate",
    "NonnegativeCombination",
]


class ConvexFunctional:
    """Base for catalog functionals on R^dim."""

    dim: int

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def subgradient(self, x: np.ndarray) -> np.ndarray:
        """Deterministic selection from the subdifferential at x."""
        raise NotImplementedError

    def subdifferential_distance(self, x: np.ndarray, g: np.ndarray) -> float:
        """Distance from g to the full subdifferential set at x.

        Zero (up to roundoff) certifies g as a valid subgradient.  The
        default assumes a single-valued subdifferential; entries with
        kinks override it, which is what lets resolvent outputs landing
        exactly on a kink be certified.
        """
        return float(np.linalg.norm(g - self.subgradient(x)))

    def prox(self, step: float, w: np.ndarray) -> np.ndarray | None:
        """argmin_x f(x) + |x - w|^2 / (2 step), or None if no closed form."""
        return None

    def subgradient_sup(self, center: np.ndarray, radius: float) -> float | None:
        """Upper bound for sup |subgradient| over the ball B(center, radius)."""
        return None

    def min_norm_minimizer(self) -> np.ndarray | None:
        """Minimum-norm global minimizer, when known in closed form."""
        return None

    @property
    def smooth(self) -> bool:
        return False


@dataclass(frozen=True)
class QuadraticForm(ConvexFunctional):
    """f(x) = x'Qx/2 + b'x with Q symmetric positive semidefinite."""

    Q: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, float))
        b = np.atleast_1d(np.asarray(self.b, float))
        if Q.shape[0] != Q.shape[1] or Q.shape[0] != b.shape[0]:
            raise ValueError("quadratic form needs a square Q matching b")
        if not np.allclose(Q, Q.T, atol=1e-12 * (1.0 + np.abs(Q).max())):
            raise ValueError("Q must be symmetric")
        lo = np.linalg.eigvalsh(Q).min()
        if lo < -1e-10 * (1.0 + np.abs(Q).max()):
            raise ValueError(f"Q must be positive semidefinite (min eig {lo:g})")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "dim", b.shape[0])

    def value(self, x):
        return 0.5 * float(x @ self.Q @ x) + float(self.b @ x)

    def subgradient(self, x):
        return self.Q @ x + self.b

    def prox(self, step, w):
        d = self.dim
        return np.linalg.solve(np.eye(d) + step * self.Q, w - step * self.b)

    def subgradient_sup(self, center, radius):
        return float(np.linalg.norm(self.Q @ center + self.b)) + radius * float(
            np.linalg.norm(self.Q, 2)
        )

    def min_norm_minimizer(self):
        sol, residuals, rank, sv = np.linalg.lstsq(self.Q, -self.b, rcond=None)
        if np.linalg.norm(self.Q @ sol + self.b) <= 1e-9 * (1.0 + np.linalg.norm(sol)):
            return sol
        return None  # inconsistent: f unbounded below

    @property
    def smooth(self):
        return True


@dataclass(frozen=True)
class ScaledNorm(ConvexFunctional):
    """f(x) = alpha |x|.  Selection at the origin is 0 (the minimum-norm
    element of the ball alpha*B that forms the subdifferential there)."""

    alpha: float
    dim: int

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    def value(self, x):
        return self.alpha * float(np.linalg.norm(x))

    def subgradient(self, x):
        nx = np.linalg.norm(x)
        if nx == 0.0:
            return np.zeros(self.dim)
        return (self.alpha / nx) * x

    def subdifferential_distance(self, x, g):
        if np.linalg.norm(x) == 0.0:
            # subdifferential at the origin is the closed ball alpha*B
            return max(0.0, float(np.linalg.norm(g)) - self.alpha)
        return float(np.linalg.norm(g - self.subgradient(x)))

    def prox(self, step, w):
        # block soft threshold
        nw = np.linalg.norm(w)
        t = step * self.alpha
        if nw <= t:
            return np.zeros(self.dim)
        return (1.0 - t / nw) * w

    def subgradient_sup(self, center, radius):
        return self.alpha

    def min_norm_minimizer(self):
        return np.zeros(self.dim)


@dataclass(frozen=True)
class HuberNorm(ConvexFunctional):
    """Radial Huber: |x|^2/2 inside |x| <= delta, affine growth outside."""

    delta: float
    dim: int

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    def value(self, x):
        nx = float(np.linalg.norm(x))
        if nx <= self.delta:
            return 0.5 * nx * nx
        return self.delta * nx - 0.5 * self.delta**2

    def subgradient(self, x):
        nx = np.linalg.norm(x)
        if nx <= self.delta:
            return np.array(x, dtype=float, copy=True)
        return (self.delta / nx) * x

    def prox(self, step, w):
        nw = np.linalg.norm(w)
        if nw <= self.delta * (1.0 + step):
            return w / (1.0 + step)
        return (1.0 - step * self.delta / nw) * w

    def subgradient_sup(self, center, radius):
        return min(self.delta, float(np.linalg.norm(center)) + radius)

    def min_norm_minimizer(self):
        return np.zeros(self.dim)

    @property
    def smooth(self):
        return True


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort method)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.shape[0] + 1)
    cond = u - css / k > 0
    rho = int(k[cond][-1])
    tau = css[rho - 1] / rho
    return np.maximum(v - tau, 0.0)


@dataclass(frozen=True)
class MaxCoordinate(ConvexFunctional):
    """f(x) = max_i x_i.

    The subdifferential at x is the face of the probability simplex
    spanned by the argmax coordinates; the selection averages them,
    which is the minimum-norm point of that face.  f is unbounded below,
    so the associated operator has no zero; the minimum-norm element of
    the closure of its range is the simplex centroid.
    """

    dim: int

    def value(self, x):
        return float(np.max(x))

    def subgradient(self, x):
        top = self._argmax_mask(x)
        g = np.zeros(self.dim)
        g[top] = 1.0 / top.sum()
        return g

    @staticmethod
    def _argmax_mask(x, tol: float = 1e-12) -> np.ndarray:
        m = np.max(x)
        return x >= m - tol * (1.0 + abs(m))

    def subdifferential_distance(self, x, g):
        # subdifferential = simplex face spanned by the argmax coordinates
        top = self._argmax_mask(x)
        off_face = float(np.linalg.norm(g[~top])) if (~top).any() else 0.0
        neg = float(np.linalg.norm(np.minimum(g[top], 0.0)))
        mass = abs(float(np.sum(g[top])) - 1.0)
        return off_face + neg + mass

    def prox(self, step, w):
        # Moreau: prox of the simplex support function
        return w - step * _project_simplex(w / step)

    def subgradient_sup(self, center, radius):
        return 1.0

    def range_min_norm(self) -> np.ndarray:
        return np.full(self.dim, 1.0 / self.dim)


@dataclass(frozen=True)
class NonnegativeCombination(ConvexFunctional):
    """sum_k w_k f_k with w_k >= 0 over catalog entries.

    The subgradient sums the member selections (a valid selection of the
    sum's subdifferential).  No generic closed-form prox or minimizer:
    tests pin those with brute-force search instead.
    """

    terms: tuple[tuple[float, ConvexFunctional], ...]

    def __post_init__(self):
        terms = tuple((float(w), f) for w, f in self.terms)
        if not terms:
            raise ValueError("combination needs at least one term")
        dims = {f.dim for _, f in terms}
        if len(dims) != 1:
            raise ValueError(f"mixed dimensions in combination: {sorted(dims)}")
        for w, _ in terms:
            if w < 0:
                raise ValueError("combination weights must be nonnegative")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "dim", dims.pop())

    def value(self, x):
        return sum(w * f.value(x) for w, f in self.terms)

    def subgradient(self, x):
        g = np.zeros(self.dim)
        for w, f in self.terms:
            g += w * f.subgradient(x)
        return g

    def subdifferential_distance(self, x, g):
        # Exact when at most one member is nonsmooth: peel the smooth
        # selections off g and test the remainder against the kinky one.
        rough = [(w, f) for w, f in self.terms if not f.smooth]
        if len(rough) > 1:
            return float(np.linalg.norm(g - self.subgradient(x)))
        rest = np.asarray(g, float).copy()
        for w, f in self.terms:
            if f.smooth:
                rest -= w * f.subgradient(x)
        if not rough:
            return float(np.linalg.norm(rest))
        w, f = rough[0]
        return w * f.subdifferential_distance(x, rest / w)

    def subgradient_sup(self, center, radius):
        total = 0.0
        for w, f in self.terms:
            s = f.subgradient_sup(center, radius)
            if s is None:
                return None
            total += w * s
        return total

    @property
    def smooth(self):
        return all(f.smooth for _, f in self.terms)
