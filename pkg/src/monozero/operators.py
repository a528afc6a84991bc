"""Full-domain monotone operators with analytic certification metadata.

A :class:`MonotoneMap` is a deterministic single-valued selection
``x -> y`` from a (possibly multivalued) monotone operator on R^dim.
Alongside the evaluation it may carry closed forms that the reference
oracle uses to certify solver output without re-deriving them
numerically: a resolvent, the minimum-norm zero, the minimum-norm
element ``a0`` of the closure of the range, and a sup bound for |y|
over balls.  Operators are immutable after construction and safe for
concurrent evaluation.

Constructors verify monotonicity where it is checkable at build time
(affine maps need a positive semidefinite symmetric part); sampling-based
verification for everything else lives in :func:`check_monotone`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .functionals import (
    ConvexFunctional,
    HuberNorm,
    MaxCoordinate,
    QuadraticForm,
    ScaledNorm,
)

__all__ = [
    "MonotoneMap",
    "NotMonotoneError",
    "MonotonicityViolation",
    "affine_map",
    "constant_map",
    "subgradient_map",
    "shift_map",
    "scale_map",
    "sum_map",
    "check_monotone",
]


class NotMonotoneError(ValueError):
    """Construction rejected: the map is provably not monotone."""


@dataclass(frozen=True, eq=False)
class MonotoneMap:
    """Evaluable monotone operator plus optional closed-form metadata.

    Fields beyond ``dim``/``fn`` are certification metadata and may be
    absent (None).  ``has_zero`` is three-valued: True/False when the
    zero set is known (non)empty, None when unknown.  ``min_norm_zero``
    is only set when the norm-minimal zero is known exactly.
    """

    dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    name: str = "operator"
    resolvent_fn: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    min_norm_zero: Optional[np.ndarray] = None
    has_zero: Optional[bool] = None
    zero_is_singleton: bool = False
    a0: Optional[np.ndarray] = None
    local_sup_fn: Optional[Callable[[np.ndarray, float], float]] = None
    affine_parts: Optional[tuple[np.ndarray, np.ndarray]] = None
    smooth: bool = False
    subdiff_dist_fn: Optional[Callable[[np.ndarray, np.ndarray], float]] = None

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.fn(x)

    def inclusion_residual(self, x: np.ndarray, g: np.ndarray) -> float:
        """Distance from g to the operator's full value set at x.

        For single-valued maps this is |g - A(x)|.  Multivalued catalog
        entries supply the exact set distance, so points landing on a
        kink (where the selection differs from the required element) can
        still be certified as solving an inclusion.
        """
        if self.subdiff_dist_fn is not None:
            return self.subdiff_dist_fn(x, g)
        return float(np.linalg.norm(g - self.fn(x)))

    def __repr__(self) -> str:
        return f"MonotoneMap({self.name!r}, dim={self.dim})"


@dataclass(frozen=True)
class MonotonicityViolation:
    x1: np.ndarray
    x2: np.ndarray
    inner: float

    def __str__(self) -> str:
        return f"(y1-y2, x1-x2) = {self.inner:g} < 0 at x1={self.x1}, x2={self.x2}"


def _as_vector(v, name="vector") -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} has non-finite entries")
    return arr


def affine_map(M, b, name: str | None = None) -> MonotoneMap:
    """x -> Mx + b; monotone iff the symmetric part of M is PSD.

    Carries the full metadata set: resolvent by linear solve, the
    minimum-norm solution of Mx = -b when consistent (via least squares,
    which returns exactly that point), and ``a0`` as the least-squares
    residual vector, i.e. the projection of 0 onto the affine range.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    b = _as_vector(b, "offset")
    d = b.shape[0]
    if M.shape != (d, d):
        raise ValueError(f"matrix shape {M.shape} does not match offset dim {d}")
    if not np.isfinite(M).all():
        raise ValueError("matrix has non-finite entries")

    sym = 0.5 * (M + M.T)
    min_eig = float(np.linalg.eigvalsh(sym).min())
    scale = 1.0 + float(np.abs(M).max())
    if min_eig < -1e-10 * scale:
        raise NotMonotoneError(
            f"symmetric part has eigenvalue {min_eig:g} < 0: x -> Mx + b is not monotone"
        )

    sol, _, rank, _ = np.linalg.lstsq(M, -b, rcond=None)
    residual = M @ sol + b
    consistent = float(np.linalg.norm(residual)) <= 1e-10 * (1.0 + np.linalg.norm(b))
    a0 = np.zeros(d) if consistent else residual
    spectral = float(np.linalg.norm(M, 2)) if d > 0 else 0.0

    def resolvent(lam: float, w: np.ndarray) -> np.ndarray:
        return np.linalg.solve(np.eye(d) + lam * M, w - lam * b)

    return MonotoneMap(
        dim=d,
        fn=lambda x: M @ x + b,
        name=name or f"affine[{d}d]",
        resolvent_fn=resolvent,
        min_norm_zero=sol if consistent else None,
        has_zero=consistent,
        zero_is_singleton=consistent and rank == d,
        a0=a0,
        local_sup_fn=lambda c, r: float(np.linalg.norm(M @ c + b)) + r * spectral,
        affine_parts=(M, b),
        smooth=True,
    )


def constant_map(c, name: str | None = None) -> MonotoneMap:
    """x -> c for all x.  Monotone with equality; no zero unless c = 0.

    The range is the single point {c}, so ``a0 = c``; the resolvent is
    the translation w - lam*c.
    """
    c = _as_vector(c, "constant value")
    d = c.shape[0]
    is_zero = bool(np.all(c == 0.0))
    return MonotoneMap(
        dim=d,
        fn=lambda x: c,
        name=name or f"constant[{d}d]",
        resolvent_fn=lambda lam, w: w - lam * c,
        min_norm_zero=np.zeros(d) if is_zero else None,
        has_zero=is_zero,
        zero_is_singleton=False,
        a0=c.copy(),
        local_sup_fn=lambda c0, r: float(np.linalg.norm(c)),
        affine_parts=(np.zeros((d, d)), c.copy()),
        smooth=True,
    )


def subgradient_map(f: ConvexFunctional, name: str | None = None) -> MonotoneMap:
    """Wrap a catalog convex functional as its subgradient selection.

    Zeros of the subdifferential are exactly the minimizers of f, so the
    minimum-norm zero metadata comes from the functional's minimum-norm
    minimizer when it has one.  Rejects anything outside the catalog.
    """
    if not isinstance(f, ConvexFunctional):
        raise TypeError(
            f"subgradient_map accepts catalog functionals only, got {type(f).__name__}"
        )
    if isinstance(f, QuadraticForm):
        return affine_map(f.Q, f.b, name=name or "subgradient(quadratic)")

    d = f.dim
    has_prox = type(f).prox is not ConvexFunctional.prox
    minimizer = f.min_norm_minimizer()
    has_zero: Optional[bool] = True if minimizer is not None else None
    a0 = None
    if isinstance(f, MaxCoordinate):
        has_zero = False  # unbounded below
        a0 = f.range_min_norm()

    sup_fn = None
    if f.subgradient_sup(np.zeros(d), 1.0) is not None:
        sup_fn = lambda c, r: float(f.subgradient_sup(c, r))

    return MonotoneMap(
        dim=d,
        fn=f.subgradient,
        name=name or f"subgradient({type(f).__name__})",
        resolvent_fn=(lambda lam, w: f.prox(lam, w)) if has_prox else None,
        min_norm_zero=minimizer,
        has_zero=has_zero,
        zero_is_singleton=isinstance(f, (ScaledNorm, HuberNorm)),
        a0=a0,
        local_sup_fn=sup_fn,
        smooth=f.smooth,
        subdiff_dist_fn=None if f.smooth else f.subdifferential_distance,
    )


def shift_map(op: MonotoneMap, s, name: str | None = None) -> MonotoneMap:
    """Argument translation x -> op(x - s): zeros move by +s.

    The range is unchanged, so ``a0`` carries over exactly; the
    minimum-norm zero carries over only when the zero set is a single
    point (translating a larger set moves its norm-minimal element in a
    way the metadata cannot express).
    """
    s = _as_vector(s, "shift")
    if s.shape[0] != op.dim:
        raise ValueError(f"shift dim {s.shape[0]} != operator dim {op.dim}")
    if op.affine_parts is not None:
        M, b = op.affine_parts
        return affine_map(M, b - M @ s, name=name or f"shift({op.name})")

    res = None
    if op.resolvent_fn is not None:
        inner = op.resolvent_fn
        res = lambda lam, w: s + inner(lam, w - s)
    mnz = None
    if op.min_norm_zero is not None and op.zero_is_singleton:
        mnz = op.min_norm_zero + s
    sup_fn = None
    if op.local_sup_fn is not None:
        inner_sup = op.local_sup_fn
        sup_fn = lambda c, r: inner_sup(c - s, r)
    sd_fn = None
    if op.subdiff_dist_fn is not None:
        inner_sd = op.subdiff_dist_fn
        sd_fn = lambda x, g: inner_sd(x - s, g)

    return MonotoneMap(
        dim=op.dim,
        fn=lambda x: op.fn(x - s),
        name=name or f"shift({op.name})",
        resolvent_fn=res,
        min_norm_zero=mnz,
        has_zero=op.has_zero,
        zero_is_singleton=op.zero_is_singleton,
        a0=op.a0,
        local_sup_fn=sup_fn,
        smooth=op.smooth,
        subdiff_dist_fn=sd_fn,
    )


def scale_map(op: MonotoneMap, alpha: float, name: str | None = None) -> MonotoneMap:
    """Positive scaling x -> alpha * op(x): same zero set, scaled range."""
    alpha = float(alpha)
    if alpha <= 0:
        raise ValueError("scale factor must be positive")
    if op.affine_parts is not None:
        M, b = op.affine_parts
        return affine_map(alpha * M, alpha * b, name=name or f"scale({op.name})")

    res = None
    if op.resolvent_fn is not None:
        inner = op.resolvent_fn
        res = lambda lam, w: inner(lam * alpha, w)
    sup_fn = None
    if op.local_sup_fn is not None:
        inner_sup = op.local_sup_fn
        sup_fn = lambda c, r: alpha * inner_sup(c, r)
    sd_fn = None
    if op.subdiff_dist_fn is not None:
        inner_sd = op.subdiff_dist_fn
        sd_fn = lambda x, g: alpha * inner_sd(x, g / alpha)

    return MonotoneMap(
        dim=op.dim,
        fn=lambda x: alpha * op.fn(x),
        name=name or f"scale({op.name})",
        resolvent_fn=res,
        min_norm_zero=op.min_norm_zero,
        has_zero=op.has_zero,
        zero_is_singleton=op.zero_is_singleton,
        a0=None if op.a0 is None else alpha * op.a0,
        local_sup_fn=sup_fn,
        smooth=op.smooth,
        subdiff_dist_fn=sd_fn,
    )


def _scalar_affine(op: MonotoneMap) -> Optional[tuple[float, np.ndarray]]:
    """(m, b) when op is x -> m*x + b, else None."""
    if op.affine_parts is None:
        return None
    M, b = op.affine_parts
    m = float(M[0, 0]) if op.dim > 0 else 0.0
    if np.count_nonzero(M - m * np.eye(op.dim)) == 0:
        return m, b
    return None


def sum_map(op1: MonotoneMap, op2: MonotoneMap, name: str | None = None) -> MonotoneMap:
    """Pointwise sum of two monotone maps (always monotone).

    Metadata survives in two cases: both summands affine (the sum is
    rebuilt as an affine map), or one summand of the form m*x + b, for
    which the resolvent of the sum reduces to a rescaled resolvent of
    the other summand.  Anything else keeps only the sup bound.
    """
    if op1.dim != op2.dim:
        raise ValueError(f"dimension mismatch: {op1.dim} vs {op2.dim}")
    if op1.affine_parts is not None and op2.affine_parts is not None:
        M1, b1 = op1.affine_parts
        M2, b2 = op2.affine_parts
        return affine_map(M1 + M2, b1 + b2, name=name or f"{op1.name}+{op2.name}")

    general, scalar = op1, _scalar_affine(op2)
    if scalar is None:
        general, scalar = op2, _scalar_affine(op1)

    res = None
    has_zero = None
    singleton = False
    if scalar is not None and general.resolvent_fn is not None:
        m, b = scalar
        inner = general.resolvent_fn
        if m >= 0:

            def res(lam: float, w: np.ndarray) -> np.ndarray:
                shrink = 1.0 + lam * m
                return inner(lam / shrink, (w - lam * b) / shrink)

            if m > 0:
                has_zero = True  # strongly monotone sum has a unique zero
                singleton = True

    sup_fn = None
    if op1.local_sup_fn is not None and op2.local_sup_fn is not None:
        s1, s2 = op1.local_sup_fn, op2.local_sup_fn
        sup_fn = lambda c, r: s1(c, r) + s2(c, r)

    sd_fn = None
    rough = [o for o in (op1, op2) if o.subdiff_dist_fn is not None]
    if len(rough) == 1:
        kinky = rough[0]
        other = op2 if kinky is op1 else op1
        inner_sd = kinky.subdiff_dist_fn
        # peel the single-valued summand off g, test the rest exactly
        sd_fn = lambda x, g: inner_sd(x, g - other.fn(x))

    return MonotoneMap(
        dim=op1.dim,
        fn=lambda x: op1.fn(x) + op2.fn(x),
        name=name or f"{op1.name}+{op2.name}",
        resolvent_fn=res,
        has_zero=has_zero,
        zero_is_singleton=singleton,
        local_sup_fn=sup_fn,
        smooth=op1.smooth and op2.smooth,
        subdiff_dist_fn=sd_fn,
    )


def check_monotone(
    op: MonotoneMap,
    low,
    high,
    pairs: int = 10**4,
    seed: int = 0,
    tol: float = 1e-12,
) -> list[MonotonicityViolation]:
    """Sample point pairs in a box and report monotonicity failures.

    A pair violates when (y1-y2, x1-x2) < -tol*(1 + |y1-y2||x1-x2|);
    the mixed tolerance absorbs roundoff at any magnitude.  An empty
    list is evidence, not proof.
    """
    low = np.broadcast_to(np.asarray(low, float), (op.dim,))
    high = np.broadcast_to(np.asarray(high, float), (op.dim,))
    rng = np.random.default_rng(seed)
    x1s = rng.uniform(low, high, size=(pairs, op.dim))
    x2s = rng.uniform(low, high, size=(pairs, op.dim))
    out: list[MonotonicityViolation] = []
    for x1, x2 in zip(x1s, x2s):
        y1, y2 = op(x1), op(x2)
        dy, dx = y1 - y2, x1 - x2
        inner = float(dy @ dx)
        margin = tol * (1.0 + float(np.linalg.norm(dy)) * float(np.linalg.norm(dx)))
        if inner < -margin:
            out.append(MonotonicityViolation(x1.copy(), x2.copy(), inner))
    return out
