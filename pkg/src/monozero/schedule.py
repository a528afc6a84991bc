"""Regularization weight schedules and their validity checks.

The solver runs in epochs indexed by ``mu``.  Epoch ``mu`` regularizes the
operator with a positive weight ``theta(mu)``; the derived gap sequence

    rho(mu) = 1/theta(mu+1) - 1/theta(mu)

decides when an epoch has done its job (the certified radius must drop
below ``rho(mu)``).  A usable schedule needs ``theta`` positive and
strictly decreasing, ``rho`` positive and strictly decreasing, and both
tending to zero.  Decay to zero cannot be observed on a finite prefix,
so a :class:`Schedule` carries a finite ``horizon`` plus a decay witness:
``theta`` at the horizon and ``rho`` just before it must both sit below
``decay_witness``.

The default choice is ``theta(mu) = (mu+1)**-0.5``, for which
``rho(mu) = sqrt(mu+2) - sqrt(mu+1)``: positive, strictly decreasing,
vanishing.  Among power laws ``(mu+1)**-p`` this exponent balances the
two error sources of the solver (regularization bias ~ theta, tracking
radius ~ rho), which is why it is the default.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Schedule",
    "ScheduleError",
    "ScheduleViolation",
    "power_schedule",
    "validate_schedule",
]


class ScheduleError(ValueError):
    """Raised when a solve is attempted with an invalid schedule."""


@dataclass(frozen=True)
class ScheduleViolation:
    """One failed schedule invariant, locating the first offending index."""

    kind: str
    index: int
    detail: str

    def __str__(self) -> str:
        return f"[{self.kind}] at mu={self.index}: {self.detail}"


@dataclass(frozen=True)
class Schedule:
    """A weight sequence ``mu -> theta(mu)`` with a finite validation horizon.

    ``theta_of`` must be defined for every integer in ``[0, horizon]`` and
    should also accept an integer ndarray (power laws written with numpy
    ufuncs do so for free); scalar-only callables are handled with a
    slower fallback.
    """

    theta_of: Callable[[int], float]
    horizon: int
    decay_witness: float = 0.5
    label: str = "custom"

    def __post_init__(self) -> None:
        if self.horizon < 2:
            raise ScheduleError("schedule horizon must be at least 2")
        if not self.decay_witness > 0:
            raise ScheduleError("decay witness must be positive")

    def theta(self, mu: int) -> float:
        return float(self.theta_of(mu))

    def rho(self, mu: int) -> float:
        """Gap value 1/theta(mu+1) - 1/theta(mu); needs mu + 1 <= horizon."""
        return 1.0 / self.theta(mu + 1) - 1.0 / self.theta(mu)

    def theta_values(self) -> np.ndarray:
        """theta over 0..horizon inclusive, as a float array."""
        idx = np.arange(self.horizon + 1)
        try:
            vals = np.asarray(self.theta_of(idx), dtype=float)
            if vals.shape != idx.shape:
                raise TypeError
        except Exception:
            vals = np.array([float(self.theta_of(int(m))) for m in idx])
        return vals


def power_schedule(
    exponent: float = 0.5,
    scale: float = 1.0,
    horizon: int = 10**6,
    decay_witness: float = 0.5,
) -> Schedule:
    """Power-law schedule ``theta(mu) = scale * (mu+1)**-exponent``.

    Valid for ``0 < exponent < 1`` (at exponent 1 the gap sequence
    stops decreasing; validation will report it).  ``exponent=0.5`` is
    the package default.
    """
    if scale <= 0:
        raise ScheduleError("power schedule scale must be positive")
    label = f"power:{exponent:g}" if scale == 1.0 else f"power:{exponent:g},{scale:g}"
    return Schedule(
        theta_of=lambda mu: scale * (mu + 1.0) ** (-exponent),
        horizon=horizon,
        decay_witness=decay_witness,
        label=label,
    )


def default_schedule(horizon: int = 10**6) -> Schedule:
    return power_schedule(0.5, horizon=horizon)


def _first_bad(mask: np.ndarray) -> int:
    return int(np.argmax(mask))


def validate_schedule(schedule: Schedule) -> list[ScheduleViolation]:
    """Check every schedule invariant over the horizon.

    Returns an empty list iff the schedule is admissible.  Violations are
    data, not exceptions; each one names the first index where an
    inequality fails.  Checked, with ``H = horizon`` and witness ``eps``:

    * ``theta(mu) > 0`` and finite for ``mu in [0, H]``
    * ``theta(mu+1) < theta(mu)`` for ``mu < H``
    * ``rho(mu) > 0`` for ``mu < H``
    * ``rho(mu+1) < rho(mu)`` for ``mu < H - 1``
    * ``theta(H) < eps`` and ``rho(H-1) < eps`` (decay witness)
    """
    out: list[ScheduleViolation] = []
    theta = schedule.theta_values()
    eps = schedule.decay_witness

    bad = ~np.isfinite(theta) | (theta <= 0.0)
    if bad.any():
        i = _first_bad(bad)
        out.append(ScheduleViolation("theta_not_positive", i, f"theta={theta[i]!r}"))
        return out  # rho is meaningless past this point

    not_dec = theta[1:] >= theta[:-1]
    if not_dec.any():
        i = _first_bad(not_dec)
        out.append(
            ScheduleViolation(
                "theta_not_decreasing", i, f"theta({i})={theta[i]:g} <= theta({i + 1})={theta[i + 1]:g}"
            )
        )

    rho = 1.0 / theta[1:] - 1.0 / theta[:-1]
    not_pos = rho <= 0.0
    if not_pos.any():
        i = _first_bad(not_pos)
        out.append(ScheduleViolation("rho_not_positive", i, f"rho({i})={rho[i]:g}"))

    rho_not_dec = rho[1:] >= rho[:-1]
    if rho_not_dec.any():
        i = _first_bad(rho_not_dec)
        out.append(
            ScheduleViolation(
                "rho_not_decreasing", i, f"rho({i})={rho[i]:g} <= rho({i + 1})={rho[i + 1]:g}"
            )
        )

    h = schedule.horizon
    if not theta[h] < eps:
        out.append(
            ScheduleViolation(
                "theta_decay_witness", h, f"theta({h})={theta[h]:g} >= witness {eps:g}"
            )
        )
    if not rho[h - 1] < eps:
        out.append(
            ScheduleViolation(
                "rho_decay_witness", h - 1, f"rho({h - 1})={rho[h - 1]:g} >= witness {eps:g}"
            )
        )
    return out
