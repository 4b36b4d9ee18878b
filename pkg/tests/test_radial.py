import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad, solve_ivp

from toda_sigma.closure import enumerate_sigma
from toda_sigma.conic import Conic
from toda_sigma.errors import IntegrationOverflow, NonConvergence
from toda_sigma.quantization import cartan, pohozaev_residual
from toda_sigma.radial import (
    Decay,
    RadialProblem,
    classify_decay,
    detect_groups,
    detect_plateaus,
    dopri54,
    integrate,
    liouville_exact,
    radial_residuals,
    read_trajectory_csv,
    residual_report,
    start_state,
)


@pytest.fixture(scope="module")
def tower():
    return integrate(RadialProblem.build([0, 0], [0, -30], t_range=(-7, 40)))


@pytest.fixture(scope="module")
def symmetric():
    return integrate(RadialProblem.build([0, 0], [0, 0], t_range=(-7, 12)))


@pytest.fixture(scope="module")
def scalar():
    return integrate(RadialProblem.build([0], [0]))


# ------------------------------------------------------------------ integrator

def test_dopri_exponential():
    ts, ys = dopri54(lambda t, y: -y, (0, 5), [1.0], rtol=1e-11, atol=1e-12)
    assert ts[-1] == 5
    assert np.max(np.abs(ys[0] - np.exp(-ts))) < 1e-10


def test_dopri_oscillator_respects_max_step():
    ts, ys = dopri54(lambda t, y: np.array([y[1], -y[0]]), (0, 10), [0.0, 1.0],
                     rtol=1e-10, atol=1e-10, max_step=0.05)
    assert np.max(np.diff(ts)) <= 0.05 + 1e-15
    assert np.max(np.abs(ys[0] - np.sin(ts))) < 1e-8


def test_dopri_step_underflow():
    # y' = y^2 blows up at t = 1
    with pytest.raises(NonConvergence) as info:
        dopri54(lambda t, y: y * y, (0, 2), [1.0])
    assert 0.99 < info.value.t <= 1.0


def test_dopri_check_callback_aborts():
    def check(t, y):
        if t > 1:
            raise RuntimeError("stop")
    with pytest.raises(RuntimeError):
        dopri54(lambda t, y: -y, (0, 5), [1.0], check=check)


def test_dopri_rejects_backward_span():
    with pytest.raises(ValueError):
        dopri54(lambda t, y: y, (1, 0), [1.0])


# ------------------------------------------------------------------ problem set-up

def test_problem_validation():
    with pytest.raises(ValueError):
        RadialProblem.build([0, 0], [0])
    with pytest.raises(ValueError):
        RadialProblem.build([0], [0], t_range=(-5, 5))
    with pytest.raises(ValueError):
        RadialProblem.build([-1], [0])
    with pytest.raises(ValueError):
        RadialProblem.build([0], [0], h=[0.0])


def test_start_state_flux_law():
    p = RadialProblem.build(["1/2", 0, "-1/3"], [0.1, -2, 0.4])
    y = start_state(p)
    u, du, sigma = np.split(y, 3)
    A = np.array(cartan(3).entries, dtype=float)
    assert np.allclose(du + A @ sigma, 0, atol=1e-18)
    assert np.all(sigma > 0)


def test_overflow_is_reported_with_t():
    with pytest.raises(IntegrationOverflow) as info:
        integrate(RadialProblem.build([0], [800.0]))
    assert info.value.t is not None


# ------------------------------------------------------------------ closed form

def test_liouville_examples():
    assert liouville_exact(1, 0.5, 1.0, 0.0) == (0.0, 0.0)
    u, s = liouville_exact(1, 0.5, 1.0, 2.0)
    assert s == pytest.approx(1.0, abs=1e-15)
    _, s_far = liouville_exact(1, 0.5, 1.0, 1e8)
    assert s_far == pytest.approx(2.0, abs=1e-12)


def test_liouville_sigma_is_the_integral_of_the_density():
    mu, lam, h = 1.5, 0.7, 2.0
    def dens(s):
        u, _ = liouville_exact(mu, lam, h, s)
        return h * s ** (2 * mu - 1) * math.exp(u)
    for r in (0.3, 1.0, 2.5):
        val, _ = quad(dens, 0, r, epsabs=1e-13, epsrel=1e-13)
        assert val == pytest.approx(liouville_exact(mu, lam, h, r)[1], rel=1e-10)


@given(st.floats(0.2, 4), st.floats(0.1, 3), st.floats(0.1, 5))
def test_closed_form_satisfies_both_laws(mu, lam, h):
    r = np.geomspace(1e-3, 1e3, 200)
    t = np.log(r)
    u, s = liouville_exact(mu, lam, h, r)
    x = lam * lam * r ** (2 * mu)
    du = -4 * mu * x / (1 + x)                      # d/dt of u
    rep = radial_residuals(t, u[None], du[None], s[None], [mu - 1], [h])
    assert rep.max_neumann_rel < 1e-12
    assert rep.max_pohozaev_rel < 1e-12


def test_zero_energy_residuals_vanish():
    t = np.linspace(-7, 7, 30)
    z = np.zeros((2, 30))
    rep = radial_residuals(t, z - 2000.0, z, z, [0, 0], [1, 1])
    assert rep.max_neumann_rel == 0 and rep.max_pohozaev_rel == 0


# ------------------------------------------------------------------ runs

def test_scalar_matches_closed_form(scalar):
    u, s = liouville_exact(1, 0.5, 1.0, scalar.r)
    assert np.max(np.abs(scalar.u[0] - u)) <= 1e-8
    assert np.max(np.abs(scalar.sigma[0] - s)) <= 1e-6


def test_convergence_under_tolerance_halving():
    """Halving both tolerances at least halves the sup error (asymptotic regime)."""
    base = RadialProblem.build([0], [0], max_step=math.inf)

    def sup_err(tol):
        tr = integrate(base.replace(rtol=tol, atol=tol))
        u, s = liouville_exact(1, 0.5, 1.0, tr.r)
        return max(np.max(np.abs(tr.u[0] - u)), np.max(np.abs(tr.sigma[0] - s)))

    for tol in (1e-9, 1e-10):
        assert sup_err(tol) >= 2 * sup_err(tol / 2), tol


def test_symmetric_components_coincide(symmetric):
    assert np.max(np.abs(symmetric.sigma[0] - symmetric.sigma[1])) <= 1e-9
    assert np.allclose(symmetric.final_sigma, 4, atol=1e-3)
    assert classify_decay(symmetric, 12) == [Decay.FAST, Decay.FAST]


def test_monotone_energy(tower, symmetric, scalar):
    for tr in (tower, symmetric, scalar):
        assert np.all(np.diff(tr.sigma, axis=1) >= -1e-14)


def test_against_scipy_reference():
    p = RadialProblem.build(["1/3", 0], [0, -6], t_range=(-7, 15))
    tr = integrate(p)
    A = np.array(cartan(2).entries, dtype=float)
    mu2 = 2 * p.mu

    def rhs(t, y):
        d = np.exp(y[:2] + mu2 * t)
        return np.concatenate([y[2:4], -A @ d, d])

    ref = solve_ivp(rhs, p.t_range, start_state(p), method="DOP853", rtol=1e-13, atol=1e-13,
                    dense_output=True)
    want = ref.sol(tr.t)
    assert np.max(np.abs(tr.sigma - want[4:])) < 1e-7
    assert np.max(np.abs(tr.u - want[:2])) < 1e-7


def test_residual_laws_on_runs(tower, symmetric, scalar):
    for tr in (tower, symmetric, scalar):
        rep = residual_report(tr)
        assert rep.max_neumann_rel <= 1e-6
        assert rep.max_pohozaev_rel <= 1e-6


def test_terminal_consistency(tower, symmetric):
    for tr in (tower, symmetric):
        if all(d is Decay.FAST for d in classify_decay(tr, tr.t[-1])):
            g = tr.problem.gamma
            assert abs(pohozaev_residual(cartan(2), tr.final_sigma.tolist(), g)) <= 1e-3


# ------------------------------------------------------------------ decay and plateaus

def test_classify_decay_tower(tower):
    assert classify_decay(tower, 5) == [Decay.FAST, Decay.SLOW]
    assert classify_decay(tower, tower.t[0]) == [Decay.SLOW, Decay.SLOW]
    assert classify_decay(tower, 40) == [Decay.FAST, Decay.FAST]


def test_tower_plateaus_are_members(tower):
    pls = detect_plateaus(tower)
    assert len(pls) == 3
    members = np.array(enumerate_sigma(Conic(1, 1)).as_floats())
    for pl, want in zip(pls, [(2, 0), (2, 4), (4, 4)]):
        assert np.max(np.abs(np.array(pl.sigma) - want)) < 0.05
        assert np.min(np.max(np.abs(members - np.array(pl.sigma)), axis=1)) < 0.05
        assert pl.length >= 2.0
    assert [pl.decay for pl in pls][0] == (Decay.FAST, Decay.SLOW)


def test_single_plateaus(symmetric, scalar):
    (pl,) = detect_plateaus(symmetric)
    assert np.allclose(pl.sigma, 4, atol=1e-3)
    (pl,) = detect_plateaus(scalar)
    assert pl.sigma[0] == pytest.approx(2.0, abs=1e-3)


def test_plateau_parameters_matter(tower):
    assert detect_plateaus(tower, min_length=100) == []
    # with the stricter slope tolerance the two middle plateaus are too short
    assert len(detect_plateaus(tower, slope_tol=1e-3)) < 3


# ------------------------------------------------------------------ CSV

def test_csv_round_trip(symmetric, tmp_path):
    path = tmp_path / "traj.csv"
    symmetric.to_csv(path)
    cols = read_trajectory_csv(path)
    assert cols["n"] == 2
    assert np.array_equal(cols["t"], symmetric.t)
    assert np.array_equal(cols["sigma"], symmetric.sigma)
    assert np.array_equal(cols["du"], symmetric.du)
    header = path.read_text().splitlines()[0]
    assert header == "t,r,u1,u2,du1,du2,sigma1,sigma2,pohozaev_residual"


@pytest.mark.parametrize("text", [
    "",
    "a,b,c\n1,2,3\n",
    "t,r,u1,du1,sigma1,pohozaev_residual\n",
    "t,r,u1,du1,sigma1,pohozaev_residual\n1,2,3,x,5,6\n",
    "t,r,u1,du1,sigma1,pohozaev_residual\n1,2,3,4,5\n",
    "t,r,u1,du1,sigma1,pohozaev_residual\n1,2,3,nan,5,6\n",
])
def test_csv_rejects_malformed(text):
    with pytest.raises(ValueError):
        read_trajectory_csv(io.StringIO(text))


# ------------------------------------------------------------------ groups

def test_group_examples():
    assert detect_groups([(0, 0), (1e-6, 0), (1, 0)]) == [[0, 1], [2]]
    assert detect_groups([(0, 0), (1, 0), (0, 1)]) == [[0, 1, 2]]
    eps = 1e-4
    assert detect_groups([[0], [eps], [2 * eps], [1], [1 + eps], [1e6]]) == [[0, 1, 2], [3, 4], [5]]
    assert detect_groups([(3, 3)]) == [[0]]
    with pytest.raises(ValueError):
        detect_groups([(0, 0)], ratio=1)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5), st.integers(2, 4), st.integers(0, 2**31))
def test_groups_recover_separated_clusters(k, size, seed):
    rng = np.random.default_rng(seed)
    centers = np.arange(k)[:, None] * np.array([1e5, 0.0])
    pts = np.concatenate([c + rng.uniform(0, 1, (size, 2)) + np.arange(size)[:, None] for c in centers])
    perm = rng.permutation(len(pts))
    groups = detect_groups(pts[perm])
    labels = sorted(sorted(int(perm[i]) // size for i in g) for g in groups)
    assert labels == [[c] * size for c in range(k)]
