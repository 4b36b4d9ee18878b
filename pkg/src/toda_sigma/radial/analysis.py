"""Decay classification and energy-plateau detection on radial trajectories."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .problem import Trajectory, _cartan_array

DEFAULT_THRESHOLD = 3.0
DEFAULT_SLOPE_TOL = 1e-2
DEFAULT_MIN_LENGTH = 2.0


class Decay(str, enum.Enum):
    FAST = "fast"
    SLOW = "slow"


def decay_slopes(traj: Trajectory) -> np.ndarray:
    """``d/dt (u_i + 2 mu_i t) = 2 mu_i - sum_j a_ij sigma_j`` on the grid."""
    A = _cartan_array(traj.n)
    return 2 * traj.problem.mu[:, None] - A @ traj.sigma


def classify_decay(traj: Trajectory, t: float, threshold: float = DEFAULT_THRESHOLD) -> list[Decay]:
    """Fast/slow label for each component at the grid point nearest ``t``.

    A component is fast when ``u_i + 2 log r`` (with the singular part
    restored) is at most ``-threshold`` and still falling relative to the
    harmonic profile ``-2 mu_i log r``; otherwise it is slow.
    """
    k = traj.index_of(t)
    level = traj.level()[:, k]
    slope = decay_slopes(traj)[:, k]
    return [Decay.FAST if lv <= -threshold and s < 0 else Decay.SLOW
            for lv, s in zip(level, slope)]


@dataclass(frozen=True)
class Plateau:
    t_start: float
    t_end: float
    sigma: tuple[float, ...]
    decay: tuple[Decay, ...]

    @property
    def length(self) -> float:
        return self.t_end - self.t_start

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.t_start + self.t_end)


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    runs = []
    k = 0
    m = len(mask)
    while k < m:
        if mask[k]:
            j = k
            while j + 1 < m and mask[j + 1]:
                j += 1
            runs.append((k, j))
            k = j + 1
        else:
            k += 1
    return runs


def detect_plateaus(
    traj: Trajectory,
    slope_tol: float = DEFAULT_SLOPE_TOL,
    min_length: float = DEFAULT_MIN_LENGTH,
    threshold: float = DEFAULT_THRESHOLD,
) -> list[Plateau]:
    """Maximal t-intervals of length >= ``min_length`` where every ``|d sigma_i/dt| <= slope_tol``.

    Each plateau reports ``sigma`` at the interval midpoint.  Intervals on
    which no component is fast at the midpoint (the quiet start before any
    bubble has formed) are skipped.
    """
    flat = np.max(np.abs(traj.density()), axis=0) <= slope_tol
    plateaus = []
    for i, j in _runs(flat):
        t0, t1 = float(traj.t[i]), float(traj.t[j])
        if t1 - t0 < min_length:
            continue
        mid = 0.5 * (t0 + t1)
        decay = tuple(classify_decay(traj, mid, threshold))
        if Decay.FAST not in decay:
            continue
        plateaus.append(Plateau(t0, t1, tuple(float(x) for x in traj.sigma_at(mid)), decay))
    return plateaus
