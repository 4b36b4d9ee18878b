"""Radial singular SU(n+1) Toda solutions in log-radius coordinates.

With ``t = log r`` and the regular part ``u_i = U_i - 2 gamma_i log r`` the
radial system reads

    u_i'' + sum_j a_ij h_j exp(u_j + 2 mu_j t) = 0,    mu_j = 1 + gamma_j,

and the running energy ``sigma_i(r) = int_0^r h_i s^(1 + 2 gamma_i) e^(u_i) ds``
obeys ``sigma_i' = h_i exp(u_i + 2 mu_i t)``.  The state integrated is
``(u, u', sigma)`` so two conservation laws can be checked against the
integrator itself:

* flux:      ``u_i' + sum_j a_ij sigma_j = 0``
* Pohozaev:  ``sum_i sigma_i' = 2 sum_i mu_i sigma_i - 1/2 sum_ij a_ij sigma_i sigma_j``
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import IntegrationOverflow
from ..numeric import as_rational
from ..quantization import CartanMatrix, cartan, gamma_vector
from .rk import dopri54

# largest exponent accepted before the solution is declared non-continuable
EXP_LIMIT = 700.0
MAX_START_RADIUS = 1e-3


@dataclass(frozen=True)
class RadialProblem:
    n: int
    gamma: tuple[Fraction, ...]
    h: tuple[float, ...]
    eta: tuple[float, ...]
    t_range: tuple[float, float] = (-7.0, 7.0)
    rtol: float = 1e-10
    atol: float = 1e-10
    max_step: float = 0.1
    series_order: int = 2

    def __post_init__(self):
        object.__setattr__(self, "gamma", gamma_vector(self.gamma))
        object.__setattr__(self, "h", tuple(float(x) for x in self.h))
        object.__setattr__(self, "eta", tuple(float(x) for x in self.eta))
        object.__setattr__(self, "t_range", tuple(float(x) for x in self.t_range))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        for name in ("gamma", "h", "eta"):
            if len(getattr(self, name)) != self.n:
                raise ValueError(f"{name} must have {self.n} entries")
        if any(not (x > 0 and math.isfinite(x)) for x in self.h):
            raise ValueError("h entries must be positive and finite")
        t0, t1 = self.t_range
        if not t1 > t0:
            raise ValueError("t_range must be increasing")
        if math.exp(t0) > MAX_START_RADIUS * (1 + 1e-12):
            raise ValueError(f"start radius exp({t0}) exceeds {MAX_START_RADIUS}")
        if self.series_order not in (1, 2):
            raise ValueError("series_order must be 1 or 2")

    @classmethod
    def build(cls, gamma: Sequence, eta: Sequence, h: Sequence | None = None, **kwargs) -> RadialProblem:
        gamma = tuple(as_rational(g) for g in gamma)
        n = len(gamma)
        return cls(n=n, gamma=gamma, h=tuple(h) if h is not None else (1.0,) * n, eta=tuple(eta), **kwargs)

    @property
    def mu(self) -> np.ndarray:
        return np.array([1.0 + float(g) for g in self.gamma])

    @property
    def cartan(self) -> CartanMatrix:
        return cartan(self.n)

    def replace(self, **changes) -> RadialProblem:
        fields = {k: getattr(self, k) for k in
                  ("n", "gamma", "h", "eta", "t_range", "rtol", "atol", "max_step", "series_order")}
        fields.update(changes)
        return RadialProblem(**fields)


def _cartan_array(n: int) -> np.ndarray:
    return np.array(cartan(n).entries, dtype=float)


def start_state(p: RadialProblem) -> np.ndarray:
    """Series values of ``(u, u', sigma)`` at ``t0``.

    ``u_i = eta_i - sum_j a_ij h_j e^eta_j r^(2 mu_j) / (2 mu_j)^2`` and the
    matching two-term series for ``sigma``; ``u'`` is set from the flux law.
    """
    A = _cartan_array(p.n)
    mu = p.mu
    h = np.array(p.h)
    eta = np.array(p.eta)
    t0 = p.t_range[0]
    lead = h * np.exp(eta) * np.exp(2 * mu * t0)           # h_j e^eta_j r^(2 mu_j)
    sigma = lead / (2 * mu)
    u = eta.copy()
    if p.series_order >= 2:
        coef = A * (h * np.exp(eta) / (2 * mu) ** 2)[None, :]   # c_ij
        u = eta - coef @ np.exp(2 * mu * t0)
        # sigma_i -= h_i e^eta_i sum_j c_ij r^(2 mu_i + 2 mu_j) / (2 mu_i + 2 mu_j)
        pair = 2 * mu[:, None] + 2 * mu[None, :]
        sigma = sigma - lead * np.sum(coef * np.exp(2 * mu[None, :] * t0) / pair, axis=1)
    du = -A @ sigma
    return np.concatenate([u, du, sigma])


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Accepted integrator states; each row array has shape ``(n, len(t))``."""

    problem: RadialProblem
    t: np.ndarray
    u: np.ndarray
    du: np.ndarray
    sigma: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.problem.n

    @property
    def r(self) -> np.ndarray:
        return np.exp(self.t)

    def level(self) -> np.ndarray:
        """``u_i + 2 mu_i t``: the full solution plus ``2 log r``."""
        return self.u + 2 * self.problem.mu[:, None] * self.t[None, :]

    def density(self) -> np.ndarray:
        """``d sigma_i / dt = r sigma_i'(r)``."""
        h = np.array(self.problem.h)[:, None]
        return h * np.exp(self.level())

    def index_of(self, t: float) -> int:
        """Index of the grid point nearest to ``t``."""
        i = int(np.searchsorted(self.t, t))
        if i == 0:
            return 0
        if i >= len(self.t):
            return len(self.t) - 1
        return i if abs(self.t[i] - t) < abs(self.t[i - 1] - t) else i - 1

    def sigma_at(self, t: float) -> np.ndarray:
        return np.array([np.interp(t, self.t, row) for row in self.sigma])

    @property
    def final_sigma(self) -> np.ndarray:
        return self.sigma[:, -1].copy()

    def to_csv(self, target=None) -> str | None:
        """Write ``t,r,u1..un,du1..dun,sigma1..sigman,pohozaev_residual`` with 17 significant digits."""
        n = self.n
        header = (["t", "r"] + [f"u{i + 1}" for i in range(n)] + [f"du{i + 1}" for i in range(n)]
                  + [f"sigma{i + 1}" for i in range(n)] + ["pohozaev_residual"])
        res = residual_report(self).pohozaev
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        r = self.r
        for k in range(len(self.t)):
            row = [self.t[k], r[k], *self.u[:, k], *self.du[:, k], *self.sigma[:, k], res[k]]
            writer.writerow([f"{x:.17g}" for x in row])
        text = buf.getvalue()
        if target is None:
            return text
        if hasattr(target, "write"):
            target.write(text)
        else:
            Path(target).write_text(text)
        return None


def read_trajectory_csv(source) -> dict[str, np.ndarray]:
    """Parse a trajectory CSV into column arrays; raises ValueError when malformed."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty trajectory file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 6 or header[:2] != ["t", "r"] or header[-1] != "pohozaev_residual":
        raise ValueError("unexpected trajectory header")
    n, rem = divmod(len(header) - 3, 3)
    expected = (["t", "r"] + [f"u{i + 1}" for i in range(n)] + [f"du{i + 1}" for i in range(n)]
                + [f"sigma{i + 1}" for i in range(n)] + ["pohozaev_residual"])
    if rem or header != expected:
        raise ValueError("unexpected trajectory header")
    body = [row for row in rows[1:] if row]
    if not body:
        raise ValueError("trajectory file has no data rows")
    try:
        data = np.array([[float(x) for x in row] for row in body])
    except ValueError as exc:
        raise ValueError(f"non-numeric value in trajectory: {exc}") from exc
    if data.shape[1] != len(header):
        raise ValueError("ragged trajectory rows")
    if not np.all(np.isfinite(data)):
        raise ValueError("non-finite value in trajectory")
    cols = {"t": data[:, 0], "r": data[:, 1]}
    cols["u"] = data[:, 2:2 + n].T
    cols["du"] = data[:, 2 + n:2 + 2 * n].T
    cols["sigma"] = data[:, 2 + 2 * n:2 + 3 * n].T
    cols["pohozaev_residual"] = data[:, -1]
    cols["n"] = n
    return cols


def integrate(p: RadialProblem) -> Trajectory:
    """Integrate the radial system from the series start over ``p.t_range``."""
    A = _cartan_array(p.n)
    mu2 = 2 * p.mu
    h = np.array(p.h)
    n = p.n

    def rhs(t, y):
        dens = h * np.exp(y[:n] + mu2 * t)
        return np.concatenate([y[n:2 * n], -A @ dens, dens])

    def check(t, y):
        lv = y[:n] + mu2 * t
        if np.max(lv) > EXP_LIMIT:
            raise IntegrationOverflow(f"component exponent exceeded {EXP_LIMIT} at t={t:.17g}", t=t)

    t0 = p.t_range[0]
    lead = np.array(p.eta) + mu2 * t0
    if np.max(lead) > EXP_LIMIT:
        raise IntegrationOverflow(f"start exponent exceeds {EXP_LIMIT} at t={t0:.17g}", t=t0)
    ts, ys = dopri54(rhs, p.t_range, start_state(p), rtol=p.rtol, atol=p.atol,
                     max_step=p.max_step, check=check)
    return Trajectory(p, ts, ys[:n], ys[n:2 * n], ys[2 * n:])


def liouville_exact(mu, lam: float, h: float, r):
    """Exact scalar solution with ``a_11 = 2``: returns ``(u(r), sigma(r))``.

    ``u = log(4 mu^2 lam^2 / h) - 2 log(1 + lam^2 r^(2 mu))`` and
    ``sigma = 2 mu lam^2 r^(2 mu) / (1 + lam^2 r^(2 mu))``.
    """
    mu = float(as_rational(mu)) if not isinstance(mu, float) else mu
    if mu <= 0 or lam <= 0 or h <= 0:
        raise ValueError("mu, lam and h must be positive")
    r = np.asarray(r, dtype=float)
    x = lam * lam * r ** (2 * mu)
    u = math.log(4 * mu * mu * lam * lam / h) - 2 * np.log1p(x)
    sigma = 2 * mu * x / (1 + x)
    if u.ndim == 0:
        return float(u), float(sigma)
    return u, sigma


@dataclass(frozen=True)
class ResidualReport:
    """Flux and Pohozaev residuals along a trajectory, absolute and relative."""

    t: np.ndarray
    neumann: np.ndarray
    pohozaev: np.ndarray
    neumann_rel: np.ndarray
    pohozaev_rel: np.ndarray

    @property
    def max_neumann_rel(self) -> float:
        return float(np.max(self.neumann_rel)) if self.neumann_rel.size else 0.0

    @property
    def max_pohozaev_rel(self) -> float:
        return float(np.max(self.pohozaev_rel)) if self.pohozaev_rel.size else 0.0


def radial_residuals(t, u, du, sigma, gamma: Sequence, h: Sequence) -> ResidualReport:
    """Residuals from raw column arrays (``u``, ``du``, ``sigma`` of shape ``(n, m)``)."""
    t = np.asarray(t, dtype=float)
    u, du, sigma = (np.atleast_2d(np.asarray(x, dtype=float)) for x in (u, du, sigma))
    n = u.shape[0]
    A = _cartan_array(n)
    mu = np.array([1.0 + float(as_rational(g)) for g in gamma])
    h = np.asarray(h, dtype=float)
    if mu.size != n or h.size != n:
        raise ValueError("gamma and h must have one entry per component")
    flux = A @ sigma
    neumann = du + flux
    neumann_rel = np.abs(neumann) / np.maximum(1.0, np.abs(du))
    with np.errstate(over="ignore"):
        dens = h[:, None] * np.exp(u + 2 * mu[:, None] * t[None, :])
    lhs = dens.sum(axis=0)
    linear = 2 * (mu[:, None] * sigma).sum(axis=0)
    quad = 0.5 * np.einsum("im,im->m", sigma, flux)
    pohozaev = lhs - linear + quad
    scale = np.maximum.reduce([np.ones_like(lhs), np.abs(lhs), np.abs(linear), np.abs(quad)])
    return ResidualReport(t, neumann, pohozaev, np.max(neumann_rel, axis=0), np.abs(pohozaev) / scale)


def residual_report(traj: Trajectory, A: CartanMatrix | None = None, gamma: Sequence | None = None) -> ResidualReport:
    """Flux (``neumann``) and Pohozaev residuals at every grid point of ``traj``."""
    p = traj.problem
    if A is not None and A.n != p.n:
        raise ValueError("Cartan matrix dimension does not match the trajectory")
    gamma = p.gamma if gamma is None else gamma
    return radial_residuals(traj.t, traj.u, traj.du, traj.sigma, gamma, p.h)
