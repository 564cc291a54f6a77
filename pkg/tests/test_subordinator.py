import math

import numpy as np
import pytest
from scipy import integrate, stats

from sbmlab.bernstein import BernsteinSpec, LaplaceExponent, builtin_exponent
from sbmlab.errors import ArgumentError, CapabilityError
from sbmlab.subordinator import (
    StableSamplerConfig,
    SubordinatorLaw,
    dump_draws,
    load_draws,
    sample_stable_T,
    spawn_substreams,
)

STABLE = builtin_exponent("stable-0.5")
ALL_SPECS = ("stable-0.5", "log-stable-1.0", "log-brownian")


def closed_half_stable_density(t, s):
    # T_t for phi(lam) = sqrt(lam): density (t / 2 sqrt(pi)) s^-3/2 e^{-t^2/4s}
    return t / (2.0 * math.sqrt(math.pi)) * s**-1.5 * math.exp(-(t * t) / (4.0 * s))


@pytest.fixture(scope="module")
def laws():
    return {sid: SubordinatorLaw(builtin_exponent(sid), 0.5) for sid in ALL_SPECS}


# --- density ----------------------------------------------------------------

def test_density_against_closed_form():
    law = SubordinatorLaw(STABLE, 1.0)
    got = law.density_T(1.0)
    want = 1.0 / (2.0 * math.sqrt(math.pi)) * math.exp(-0.25)
    assert want == pytest.approx(0.2196956447338612, rel=1e-12)  # frozen oracle
    assert got == pytest.approx(want, rel=1e-6)


def test_density_closed_form_sweep():
    for t in (0.05, 1.0):
        law = SubordinatorLaw(STABLE, t)
        s_star = law.typical_scale()
        tol = law._tolerance()
        for k in range(-4, 9):
            s = s_star * 10.0**k
            got = law.density_T(s)
            want = closed_half_stable_density(t, s)
            assert abs(got - want) <= tol, (t, k)


def test_density_zero_left_of_support():
    law = SubordinatorLaw(STABLE, 1.0)
    assert law.density_T(-1.0) == 0.0
    assert law.density_T(0.0) == 0.0
    assert law.density_S(0.5) == 0.0  # below the drift shift
    assert law.density_S(1.5) == law.density_T(0.5)


def test_density_nonnegative_on_table(laws):
    for sid, law in laws.items():
        tab = law.quadrature_table()
        assert np.all(tab["density"] >= 0.0), sid
        assert tab["clipped_mass"] <= 1e-5, sid


def test_normalization_within_1e6(laws):
    for sid, law in laws.items():
        tab = law.quadrature_table()
        rem = law.tail_prob(float(tab["nodes"][-1]))
        assert tab["mass"] + rem == pytest.approx(1.0, abs=1e-6), sid


def test_small_time_concentration():
    # mass concentrates left of eps as t -> 0
    law = SubordinatorLaw(STABLE, 1e-4)
    assert law.cdf_T(1e-2) > 0.999


def test_capability_error_without_complex_extension():
    spec = BernsteinSpec(
        form="levy_measure",
        levy_density=lambda t: t**-1.5 / (2.0 * math.sqrt(math.pi)),
    )
    with pytest.raises(CapabilityError):
        SubordinatorLaw(LaplaceExponent(spec), 1.0)


def test_degenerate_spec_rejected():
    with pytest.raises(CapabilityError):
        SubordinatorLaw(builtin_exponent("gaussian-stub"), 1.0)


# --- interval probabilities ---------------------------------------------------

def test_prob_S_support():
    law = SubordinatorLaw(STABLE, 1.0)
    # support of S_t starts at t
    assert law.prob_S_in(1.0, np.inf) == pytest.approx(1.0, abs=1e-8)
    assert law.prob_S_in(0.0, 1.0) == pytest.approx(0.0, abs=1e-8)


def test_prob_S_interval_closed_form():
    law = SubordinatorLaw(STABLE, 1.0)
    # P(S_1 in [1.5, 3]) = P(T_1 in [0.5, 2]) = erfc(1/(2 sqrt(2))) - erfc(1/(2 sqrt(.5)))
    want = math.erfc(1.0 / (2.0 * math.sqrt(2.0))) - math.erfc(1.0 / (2.0 * math.sqrt(0.5)))
    assert law.prob_S_in(1.5, 3.0) == pytest.approx(want, abs=1e-8)


def test_prob_near_degenerate_drift_limit():
    # phi scaled by 1e-12: S_t is numerically the pure drift t
    exp = LaplaceExponent(BernsteinSpec(form="stable", alpha=0.5, scale=1e-12))
    law = SubordinatorLaw(exp, 0.5)
    assert law.prob_S_in(0.25, 0.75) == pytest.approx(1.0, abs=1e-6)
    assert law.prob_S_in(0.6, 0.9) == pytest.approx(0.0, abs=1e-6)


def test_prob_argument_errors():
    law = SubordinatorLaw(STABLE, 1.0)
    with pytest.raises(ArgumentError):
        law.prob_S_in(2.0, 1.0)
    with pytest.raises(ArgumentError):
        law.prob_T_in(3.0, 3.0)


def test_cdf_matches_erfc_across_scales():
    for t in (0.05, 1.0):
        law = SubordinatorLaw(STABLE, t)
        ss = law.typical_scale()
        for mult in (0.5, 2.0, 40.0, 1e4):
            x = ss * mult
            want = math.erfc(t / (2.0 * math.sqrt(x)))
            assert law.cdf_T(x) == pytest.approx(want, abs=2e-6)


# --- transform consistency ----------------------------------------------------

def test_laplace_transform_consistency(laws):
    for sid, law in laws.items():
        tab = law.quadrature_table()
        for lam in (0.5, 1.0, 2.0, 5.0):
            emp = float(np.sum(tab["weights"] * tab["density"]
                               * np.exp(-lam * tab["nodes"])))
            want = math.exp(-law.t * law.exp.phi(lam))
            assert emp == pytest.approx(want, abs=1e-6), (sid, lam)


def test_first_moment_when_finite():
    # E S_t = t (1 + phi'(0+)); finite only for the light-tailed built-in
    exp = builtin_exponent("log-brownian")
    law = SubordinatorLaw(exp, 0.5)
    tab = law.quadrature_table()
    mean_T = float(np.sum(tab["weights"] * tab["density"] * tab["nodes"]))
    dphi0 = exp.phi_prime(1e-12)
    assert dphi0 == pytest.approx(0.5, rel=1e-6)
    assert law.t + mean_T == pytest.approx(law.t * (1.0 + dphi0), rel=1e-4)


def test_semigroup_convolution():
    # f_{t1+t2}(s) = (f_{t1} * f_{t2})(s), one (t1, t2) pair per spec
    for sid in ALL_SPECS:
        exp = builtin_exponent(sid)
        law1 = SubordinatorLaw(exp, 0.3)
        law2 = SubordinatorLaw(exp, 0.7)
        law12 = SubordinatorLaw(exp, 1.0)
        s = 2.0 * law12.typical_scale()

        conv, _ = integrate.quad(
            lambda u: law1.density_T(u) * law2.density_T(s - u),
            0.0, s, limit=100, epsabs=1e-10, epsrel=1e-7,
        )
        want = law12.density_T(s)
        assert conv == pytest.approx(want, rel=1e-5, abs=1e-9), sid


# --- exact stable sampler -------------------------------------------------------

def test_sampler_positive_and_reproducible():
    cfg = StableSamplerConfig(alpha=0.5, seed=7, count=10000)
    draws = sample_stable_T(cfg, 1.0)
    again = sample_stable_T(cfg, 1.0)
    assert np.all(draws > 0.0)
    np.testing.assert_array_equal(draws, again)


def test_sampler_laplace_transform_match():
    # empirical Laplace transform vs exp(-t lam^alpha) within 3 standard errors
    n = 10**6
    cfg = StableSamplerConfig(alpha=0.5, seed=123, count=n)
    draws = sample_stable_T(cfg, 1.0)
    for lam in (0.5, 1.0, 2.0):
        vals = np.exp(-lam * draws)
        emp = float(vals.mean())
        se = float(vals.std(ddof=1)) / math.sqrt(n)
        want = math.exp(-(lam**0.5))
        assert abs(emp - want) <= 3.0 * se, lam


def test_sampler_scaling_law_ks():
    # T_t equals t^{1/alpha} T_1 in law; KS distance below 0.005 at n = 1e5
    n = 10**5
    t = 0.3
    a = sample_stable_T(StableSamplerConfig(alpha=0.5, seed=3, count=n), t)
    b = t ** (1.0 / 0.5) * sample_stable_T(
        StableSamplerConfig(alpha=0.5, seed=4, count=n), 1.0
    )
    ks = stats.ks_2samp(a, b).statistic
    assert ks < 0.005


def test_sampler_rejects_bad_alpha():
    with pytest.raises(ArgumentError):
        StableSamplerConfig(alpha=1.2, seed=0, count=10)
    with pytest.raises(ArgumentError):
        StableSamplerConfig(alpha=0.5, seed=0, count=0)


def test_substreams_and_binary_dump(tmp_path):
    streams = spawn_substreams(42, 4)
    vals = [g.random(3) for g in streams]
    for i in range(1, 4):
        assert not np.allclose(vals[0], vals[i])
    path = tmp_path / "draws.bin"
    draws = sample_stable_T(StableSamplerConfig(alpha=0.5, seed=5, count=64), 1.0)
    dump_draws(path, draws)
    np.testing.assert_array_equal(load_draws(path), draws)
