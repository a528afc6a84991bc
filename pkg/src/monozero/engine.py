"""Epoch-scheduled iteration for zeros of full-domain monotone operators.

The solver maintains an iterate ``x_n`` together with a certified radius
``r_n``.  Within epoch ``mu`` it repeatedly evaluates ``y_n = A(x_n)``,
forms the regularized residual ``w_n = y_n + theta_mu * x_n`` and takes

    lambda_n = min( 1/(2 theta_mu),  theta_mu r_n^2 / |w_n|^2 )
    x_{n+1}  = x_n - lambda_n w_n
    r_{n+1}  = sqrt( (1 - 2 theta_mu lambda_n) r_n^2 + lambda_n^2 |w_n|^2 )

which provably keeps ``|x_n - p_mu| <= r_n``, where ``p_mu`` is the
unique solution of ``theta_mu p + A p = 0``.  Once ``r_n <= rho_mu`` the
epoch ends: the radius is redefined as ``(1 + |z|) rho_mu`` with
``z = A(0)``, which certifies the distance to the *next* epoch's
``p_{mu+1}``, and ``mu`` advances.  As ``theta_mu`` decays, ``p_mu``
walks the regularization path toward the minimum-norm zero of ``A``
when one exists; when none exists, ``|x_n|`` grows without bound while
``v_n = theta_mu x_n`` stabilizes at minus the minimum-norm element of
the closure of the range.

A run is strictly sequential and allocation-free in the inner loop;
identical inputs produce bit-identical iterates.  Epoch advances reuse
the cached operator value at the unchanged iterate, so they consume no
evaluation budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .schedule import Schedule, ScheduleError, validate_schedule

__all__ = [
    "SolveStatus",
    "SolveConfig",
    "SolveReport",
    "Trace",
    "OperatorEvaluationError",
    "step_lambda",
    "step_update",
    "radius_update",
    "init_radius",
    "epoch_reset",
    "solve",
]


class OperatorEvaluationError(RuntimeError):
    """Operator returned a non-finite (or overflowing) value."""

    def __init__(self, message: str, x: np.ndarray):
        super().__init__(message)
        self.x = x


class SolveStatus(Enum):
    TOLERANCE_REACHED = "tolerance_reached"
    BUDGET_EXHAUSTED = "budget_exhausted"
    DIVERGENCE_SUSPECTED = "divergence_suspected"


@dataclass(frozen=True)
class SolveConfig:
    """Termination and instrumentation knobs.

    The underlying scheme never halts on its own; these are artifact
    decisions.  ``target_mu`` is the epoch goal: stopping when ``mu``
    reaches it certifies ``|x - p_mu| <= (1+|z|) rho_{mu-1}``, a bound
    on the distance to the regularization path (not to the true zero).
    ``residual_floor`` guards the step-size division: an iterate with
    ``|w| <= residual_floor`` is treated as the exact epoch solution and
    the epoch ends immediately.  Divergence is only *suspected*:
    ``|x| >= divergence_norm`` with the epoch-to-epoch relative change
    of ``v = theta*x`` below ``v_rel_tol`` has no finite-time guarantee
    behind it, just the limit theorem.
    """

    target_mu: int = 50
    max_evals: int = 500_000
    residual_floor: float = 1e-13
    divergence_norm: float = 1e6
    v_rel_tol: float = 1e-3
    record_trace: bool = False
    record_epochs: bool = False

    def __post_init__(self) -> None:
        if self.target_mu < 1:
            raise ValueError("target_mu must be a positive integer")
        if self.max_evals < 2:
            raise ValueError("max_evals must allow at least z and y0 (>= 2)")
        if not self.residual_floor > 0:
            raise ValueError("residual_floor must be positive")
        if not self.divergence_norm > 1:
            raise ValueError("divergence_norm must exceed 1")
        if not self.v_rel_tol > 0:
            raise ValueError("v_rel_tol must be positive")


class Trace:
    """Per-update history of a solve, one row per iteration index n.

    Rows hold the pre-update state: the x_n, r_n and mu in effect when
    step n ran, together with the lambda chosen at that step.  Epoch
    resets do not produce rows (they move no iterate); their effect is
    visible as the radius jump between consecutive rows.  Iterate
    vectors are kept so that certification can measure distances to the
    regularization path afterwards.
    """

    __slots__ = ("n", "mu", "theta", "rho", "lam", "r", "w_norm", "x_norm", "v_norm", "xs")

    def __init__(self):
        self.n: list[int] = []
        self.mu: list[int] = []
        self.theta: list[float] = []
        self.rho: list[float] = []
        self.lam: list[float] = []
        self.r: list[float] = []
        self.w_norm: list[float] = []
        self.x_norm: list[float] = []
        self.v_norm: list[float] = []
        self.xs: list[np.ndarray] = []

    def __len__(self) -> int:
        return len(self.n)

    def append(self, n, mu, theta, rho, lam, r, w_norm, x):
        x_norm = float(np.linalg.norm(x))
        self.n.append(n)
        self.mu.append(mu)
        self.theta.append(theta)
        self.rho.append(rho)
        self.lam.append(lam)
        self.r.append(r)
        self.w_norm.append(w_norm)
        self.x_norm.append(x_norm)
        self.v_norm.append(theta * x_norm)
        self.xs.append(x.copy())


@dataclass(frozen=True)
class SolveReport:
    """Terminal state of a solve.

    ``cert_radius`` is the certified bound on |x_final - p_mu| carried
    out of the run: ``(1+|z|) rho_{mu-1}`` once at least one epoch has
    completed, the current radius while still in epoch 0.
    """

    status: SolveStatus
    x_final: np.ndarray
    v_final: np.ndarray
    mu_final: int
    n_final: int
    cert_radius: float
    evals: int
    trace: Optional[Trace] = None
    epoch_log: Optional[list[tuple[int, int, int, float]]] = None  # (mu_done, n, evals, new_r)

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "x_final": [float(v) for v in self.x_final],
            "v_final": [float(v) for v in self.v_final],
            "mu_final": self.mu_final,
            "n_final": self.n_final,
            "cert_radius": float(self.cert_radius),
            "evals": self.evals,
        }


def step_lambda(theta: float, r: float, w_norm: float) -> float:
    """Step size min(1/(2 theta), theta r^2 / w_norm^2).

    The first branch caps the certified contraction; the second is the
    largest step whose radius recursion still improves on r.  The caller
    must route w_norm = 0 through its residual-floor branch instead.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    if w_norm <= 0:
        raise ValueError("step_lambda needs |w| > 0; zero residual means the epoch is solved")
    if r < 0:
        raise ValueError("radius must be nonnegative")
    return min(0.5 / theta, theta * r * r / (w_norm * w_norm))


def step_update(x: np.ndarray, w: np.ndarray, lam: float) -> np.ndarray:
    """Iterate move x - lam*w."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.shape != w.shape:
        raise ValueError(f"shape mismatch: x{x.shape} vs w{w.shape}")
    if lam < 0:
        raise ValueError("step size must be nonnegative")
    return x - lam * w


def radius_update(r: float, theta: float, lam: float, w_norm: float) -> float:
    """Certified radius recursion sqrt((1 - 2 theta lam) r^2 + lam^2 w_norm^2).

    With lam from :func:`step_lambda` the radicand is provably
    nonnegative and the result strictly smaller than r (for r, w > 0).
    A materially negative radicand means the precondition
    lam <= 1/(2 theta) was violated.
    """
    radicand = (1.0 - 2.0 * theta * lam) * r * r + lam * lam * w_norm * w_norm
    if radicand < 0.0:
        slack = 1e-12 * (r * r + lam * lam * w_norm * w_norm)
        if radicand < -slack:
            raise FloatingPointError(
                f"radius recursion radicand {radicand:g} < 0: step size exceeded 1/(2 theta)"
            )
        radicand = 0.0
    return math.sqrt(radicand)


def init_radius(x0: np.ndarray, y0: np.ndarray, theta0: float) -> float:
    """Tightest admissible starting radius |x0 + y0/theta0|.

    Any larger value is also admissible but only slows epoch
    progression, so equality is used.
    """
    if theta0 <= 0:
        raise ValueError("theta0 must be positive")
    return float(np.linalg.norm(x0 + y0 / theta0))


def epoch_reset(rho_mu: float, z_norm: float) -> float:
    """Radius (1 + |z|) rho_mu certifying the transfer to the next epoch.

    Exceeds rho_{mu+1} for any admissible schedule (rho is strictly
    decreasing and the factor is >= 1), so the new epoch always starts
    with a meaningful radius test.
    """
    if rho_mu <= 0:
        raise ValueError("rho must be positive")
    if z_norm < 0:
        raise ValueError("|z| must be nonnegative")
    return (1.0 + z_norm) * rho_mu


def _evaluate(op, x: np.ndarray) -> np.ndarray:
    y = np.asarray(op(x), dtype=float)
    if y.shape != x.shape:
        raise OperatorEvaluationError(
            f"operator returned shape {y.shape}, expected {x.shape}", x.copy()
        )
    return y


def solve(op, x0, schedule: Schedule, config: SolveConfig = SolveConfig()) -> SolveReport:
    """Run the epoch-scheduled iteration until a termination event.

    Parameters
    ----------
    op : MonotoneMap or callable-with-dim
        Deterministic selection from a monotone operator on R^d.  Must
        be defined on the whole space; evaluations must be pure.
    x0 : array_like
        Starting point (any point works; it only affects the transient).
    schedule : Schedule
        Weight sequence; validated before the run starts.
    config : SolveConfig
        Termination and instrumentation knobs.

    Returns
    -------
    SolveReport
        Terminal status plus the final iterate, ``v = theta*x``, epoch
        and iteration counters, certified radius and evaluation count.
        ``report.trace`` is populated when ``config.record_trace``.

    Raises
    ------
    ScheduleError
        If the schedule violates its invariants over the horizon.
    OperatorEvaluationError
        If an evaluation returns non-finite values (the offending point
        is attached to the exception).
    """
    violations = validate_schedule(schedule)
    if violations:
        summary = "; ".join(str(v) for v in violations[:3])
        raise ScheduleError(f"invalid schedule ({len(violations)} violations): {summary}")
    if config.target_mu > schedule.horizon:
        raise ScheduleError(
            f"target_mu {config.target_mu} exceeds schedule horizon {schedule.horizon}"
        )

    x = np.array(x0, dtype=float).reshape(-1)
    dim = getattr(op, "dim", None)
    if dim is not None and x.shape[0] != dim:
        raise ValueError(f"x0 has dim {x.shape[0]}, operator expects {dim}")
    if not np.isfinite(x).all():
        raise ValueError("x0 has non-finite entries")

    z = _evaluate(op, np.zeros_like(x))
    evals = 1
    if not np.isfinite(z).all():
        raise OperatorEvaluationError("operator non-finite at the origin", np.zeros_like(x))
    z_norm = float(np.linalg.norm(z))

    mu = 0
    theta = schedule.theta(0)
    rho = schedule.rho(0)

    y = _evaluate(op, x)
    evals += 1
    n = 0
    y_valid = True
    r = init_radius(x, y, theta)
    if not math.isfinite(r):
        raise OperatorEvaluationError("operator non-finite at x0", x.copy())

    trace = Trace() if config.record_trace else None
    epoch_log: list[tuple[int, int, int, float]] | None = [] if config.record_epochs else None
    v_prev: np.ndarray | None = None
    floor = config.residual_floor
    max_evals = config.max_evals
    target = config.target_mu

    w = np.empty_like(x)  # reused buffer for y + theta*x
    status: SolveStatus | None = None

    while True:
        if mu >= target:
            status = SolveStatus.TOLERANCE_REACHED
            break

        advance = r <= rho
        w_sq = 0.0
        if not advance:
            if not y_valid:
                if evals >= max_evals:
                    status = SolveStatus.BUDGET_EXHAUSTED
                    break
                y = _evaluate(op, x)
                evals += 1
                y_valid = True
            np.multiply(x, theta, out=w)
            w += y
            w_sq = float(w @ w)
            if not w_sq < math.inf:  # also catches NaN
                if not np.isfinite(y).all():
                    raise OperatorEvaluationError("operator returned non-finite values", x.copy())
                raise OperatorEvaluationError("residual norm overflowed", x.copy())
            advance = math.sqrt(w_sq) <= floor

        if advance:
            # Step 3: certify the transfer to the next regularized solution.
            # x is untouched and the cached y stays valid, so this costs
            # no operator evaluation.
            v_cur = theta * x
            x_norm = float(np.linalg.norm(x))
            if (
                x_norm >= config.divergence_norm
                and v_prev is not None
                and float(np.linalg.norm(v_cur - v_prev))
                <= config.v_rel_tol * (float(np.linalg.norm(v_cur)) + 1e-300)
            ):
                status = SolveStatus.DIVERGENCE_SUSPECTED
                break
            v_prev = v_cur
            r = epoch_reset(rho, z_norm)
            if epoch_log is not None:
                epoch_log.append((mu, n, evals, r))
            mu += 1
            theta = schedule.theta(mu)
            rho = schedule.rho(mu) if mu < target else math.inf
            continue

        w_norm = math.sqrt(w_sq)
        lam = min(0.5 / theta, theta * r * r / w_sq)
        if trace is not None:
            trace.append(n, mu, theta, rho, lam, r, w_norm, x)
        w *= lam
        x -= w
        y_valid = False
        r = radius_update(r, theta, lam, w_norm)
        n += 1

    if mu >= 1:
        cert = (1.0 + z_norm) * schedule.rho(mu - 1)
    else:
        cert = r
    return SolveReport(
        status=status,
        x_final=x.copy(),
        v_final=theta * x,
        mu_final=mu,
        n_final=n,
        cert_radius=cert,
        evals=evals,
        trace=trace,
        epoch_log=epoch_log,
    )
