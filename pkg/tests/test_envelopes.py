import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbmlab.bernstein import builtin_exponent
from sbmlab.domains import DomainSpec
from sbmlab.envelopes import (
    EnvelopeConstants,
    SpectralEstimate,
    asymptote_table,
    check_regime_structure,
    envelope_dirichlet,
    envelope_dirichlet_large_time,
    envelope_q,
    envelope_whole_space,
    fit_constants,
    green_envelope_dirichlet,
    green_envelope_free,
    jump_dominance_constant,
    regime_partition,
)
from sbmlab.errors import ArgumentError, CapabilityError, DomainError, SingularityError
from sbmlab.kernels import DensityQuery, DensityTable
from sbmlab.reports import ComparabilityReport, combine_reports

STABLE = builtin_exponent("stable-0.5")
LOG_STABLE = builtin_exponent("log-stable-1.0")
LOG_BROWNIAN = builtin_exponent("log-brownian")
INTERVAL = DomainSpec.interval(0.0, 1.0)


# --- constants ---------------------------------------------------------------

def test_constants_validation():
    with pytest.raises(ArgumentError):
        EnvelopeConstants(side="both")
    with pytest.raises(ArgumentError):
        EnvelopeConstants(a_upper=0.0)
    k = EnvelopeConstants(side="lower", c_outer=4.0, a_lower=2.0)
    assert k.rate == 2.0
    assert k.outer(8.0) == 2.0


# --- jump envelope -------------------------------------------------------------

def test_envelope_q_cap_at_zero_radius():
    # r = 0 reduces to phi_inv(1/t)^{d/2}
    val = envelope_q(STABLE, DensityQuery(1, 0.25, 0.0))
    assert val == pytest.approx(STABLE.phi_inv(4.0) ** 0.5, rel=1e-9)


def test_envelope_q_plugin_value():
    # stable spec, d=1, t=1, r=10, rate=1:
    # min(1, 1 * 10^-1 * H(10^-2) + e^-100) with H(0.01) = 0.05
    val = envelope_q(STABLE, DensityQuery(1, 1.0, 10.0), rate=1.0)
    assert val == pytest.approx(0.005, rel=1e-10)


def test_envelope_whole_space_caps_at_zero_radius():
    k = EnvelopeConstants()
    t = 0.25
    loc = envelope_whole_space(STABLE, DensityQuery(1, t, 0.0), k, global_form=False)
    assert loc == pytest.approx(t**-0.5, rel=1e-12)
    glob = envelope_whole_space(STABLE, DensityQuery(1, 4.0, 0.0), k, global_form=True)
    assert glob == pytest.approx(min(0.5, STABLE.phi_inv(0.25) ** 0.5), rel=1e-9)


def test_envelope_monotone_in_radius():
    k = EnvelopeConstants()
    for exp in (STABLE, LOG_BROWNIAN):
        rs = np.linspace(0.0, 10.0, 41)
        vals = [envelope_whole_space(exp, DensityQuery(1, 0.3, float(r)), k)
                for r in rs]
        assert np.all(np.diff(vals) <= 1e-12)
        vals_q = [envelope_q(exp, DensityQuery(1, 0.3, float(r))) for r in rs]
        assert np.all(np.diff(vals_q) <= 1e-12)


# --- Dirichlet envelopes -----------------------------------------------------------

def test_dirichlet_boundary_factors():
    k = EnvelopeConstants()
    t = 0.01  # sqrt(t) = 0.1, interior points have factor one
    full = envelope_dirichlet(STABLE, t, [0.5], [0.4], INTERVAL, k)
    interior = min(t**-0.5, envelope_whole_space(
        STABLE, DensityQuery(1, t, 0.1), k, global_form=False,
        q_value=t * STABLE.H(0.1**-2.0) / 0.1
        + STABLE.phi_inv(1.0 / t) ** 0.5 * math.exp(-0.01 * STABLE.phi_inv(1.0 / t)),
    ))
    assert full == pytest.approx(interior, rel=1e-9)


def test_dirichlet_vanishes_linearly_at_boundary():
    # envelope / boundary distance stabilizes as x approaches the boundary
    k = EnvelopeConstants()
    t = 0.04
    slopes = [
        envelope_dirichlet(STABLE, t, [eps], [0.5], INTERVAL, k) / eps
        for eps in (1e-3, 5e-4, 2.5e-4)
    ]
    assert slopes[1] == pytest.approx(slopes[2], rel=5e-3)
    assert slopes[0] == pytest.approx(slopes[2], rel=2e-2)


def test_dirichlet_never_exceeds_interior_shape():
    k = EnvelopeConstants()
    for t in (0.01, 0.1):
        for (x, y) in ((0.1, 0.9), (0.45, 0.55), (0.02, 0.5)):
            v = envelope_dirichlet(STABLE, t, [x], [y], INTERVAL, k)
            assert v <= t ** -0.5 * (1.0 + 1e-12)


def test_dirichlet_rejects_outside_points():
    with pytest.raises(DomainError):
        envelope_dirichlet(STABLE, 0.1, [1.5], [0.5], INTERVAL, EnvelopeConstants())


def test_large_time_factorization():
    est = SpectralEstimate(lambda1=10.0, stderr=0.1)
    v1 = envelope_dirichlet_large_time(2.0, [0.3], [0.6], INTERVAL, est)
    v2 = envelope_dirichlet_large_time(4.0, [0.3], [0.6], INTERVAL, est)
    assert v2 / v1 == pytest.approx(math.exp(-20.0), rel=1e-12)
    assert v1 == pytest.approx(
        envelope_dirichlet_large_time(2.0, [0.6], [0.3], INTERVAL, est), rel=1e-12
    )
    with pytest.raises(CapabilityError):
        envelope_dirichlet_large_time(2.0, [0.3], [0.6], DomainSpec.half_space(1), est)


# --- Green envelopes ------------------------------------------------------------

def test_green_free_plugin():
    # min(16, 1/phi(1/16)) = min(16, 4) = 4, envelope = 4/64
    assert green_envelope_free(STABLE, 3, 4.0) == pytest.approx(1.0 / 16.0, rel=1e-12)


def test_green_free_small_r_branch():
    # for r <= 1, phi(1) phi(r^-2)^{-1} >= r^2 so the r^2 branch is active
    for r in (0.1, 0.5, 1.0):
        assert green_envelope_free(STABLE, 3, r) == pytest.approx(
            r**-1.0, rel=1e-12
        )


def test_green_free_log_corrected_shape():
    # the jump branch r^{-d}/phi(r^-2) carries the log correction
    # r^{2-d} log(1/r); the envelope min itself is Brownian-like r^{2-d}
    # because phi(lam) <= lam for this spec
    for r in (1e-3, 1e-2):
        branch = r**-3.0 / LOG_BROWNIAN.phi(r**-2.0)
        ratio = branch * r / math.log(1.0 / r)
        assert 0.3 < ratio < 3.0
        assert green_envelope_free(LOG_BROWNIAN, 3, r) == pytest.approx(
            r**-1.0, rel=1e-12
        )


def test_green_dirichlet_three_cases():
    ball3 = DomainSpec.ball(3, 2.0)
    x = np.array([1.0, 0.0, 0.0])
    y = np.array([0.0, 0.0, 0.0])
    assert green_envelope_dirichlet(3, x, y, ball3) == pytest.approx(
        min(1.0, 1.0 * 2.0 / 1.0), rel=1e-12
    )
    ball2 = DomainSpec.ball(2, 2.0)
    # delta(x) delta(y) = r^2 gives log 2
    xx = np.array([1.0, 0.0])
    yy = np.array([0.0, 0.0])
    r2 = 1.0
    assert green_envelope_dirichlet(2, xx, yy, ball2) == pytest.approx(
        math.log1p(1.0 * 2.0 / r2), rel=1e-12
    )
    assert green_envelope_dirichlet(1, [0.25], [0.75], INTERVAL) == pytest.approx(
        0.125, rel=1e-12
    )
    with pytest.raises(SingularityError):
        green_envelope_dirichlet(1, [0.5], [0.5], INTERVAL)


# --- asymptote tables ---------------------------------------------------------------

def test_asymptote_bands_log_brownian():
    lams = np.concatenate([np.geomspace(1e-4, 1.0, 8), np.geomspace(1e2, 1e8, 8)])
    rows = asymptote_table(LOG_BROWNIAN, lams)
    for row in rows:
        assert 0.1 < row["phi_inv_ratio"] < 10.0, row
        assert 0.03 < row["H_ratio"] < 20.0, row


def test_asymptote_bands_log_stable():
    lams = np.concatenate([np.geomspace(1e-4, 1.0, 8), np.geomspace(1e2, 1e8, 8)])
    rows = asymptote_table(LOG_STABLE, lams)
    for row in rows:
        assert 0.1 < row["phi_inv_ratio"] < 10.0, row
        assert 0.05 < row["H_ratio"] < 20.0, row


def test_asymptote_grid_must_avoid_crossover():
    with pytest.raises(ArgumentError):
        asymptote_table(LOG_BROWNIAN, [1.5])
    with pytest.raises(CapabilityError):
        asymptote_table(STABLE, [10.0])


# --- fit_constants --------------------------------------------------------------------

def _toy_table(values):
    return DensityTable(d=1, ts=[0.5, 1.0], rs=[0.0, 1.0], values=values,
                        route="fourier", which="p", spec_id="toy")


def test_fit_constants_identity():
    k = EnvelopeConstants()
    env = lambda q: envelope_whole_space(STABLE, q, k)
    vals = np.array([[env(DensityQuery(1, t, r)) for r in (0.0, 1.0)]
                     for t in (0.5, 1.0)])
    rep = fit_constants(_toy_table(vals), env)["all"]
    assert rep.inf_ratio == pytest.approx(1.0, rel=1e-12)
    assert rep.sup_ratio == pytest.approx(1.0, rel=1e-12)
    assert rep.c_outer == pytest.approx(1.0, rel=1e-12)


def test_fit_constants_doubled():
    k = EnvelopeConstants()
    env = lambda q: envelope_whole_space(STABLE, q, k)
    vals = 2.0 * np.array([[env(DensityQuery(1, t, r)) for r in (0.0, 1.0)]
                           for t in (0.5, 1.0)])
    rep = fit_constants(_toy_table(vals), env)["all"]
    assert rep.inf_ratio == pytest.approx(2.0, rel=1e-12)
    assert rep.sup_ratio == pytest.approx(2.0, rel=1e-12)


def test_fit_constants_empty_region():
    k = EnvelopeConstants()
    env = lambda q: envelope_whole_space(STABLE, q, k)
    vals = np.ones((2, 2))
    reps = fit_constants(_toy_table(vals), env,
                         regions={"none": np.zeros((2, 2), dtype=bool)})
    assert reps["none"].n_points == 0
    with pytest.raises(ArgumentError):
        combine_reports([reps["none"]])


# --- regime structure ---------------------------------------------------------------

def test_regime_partition_covers_grid():
    ts = np.geomspace(1e-3, 10.0, 12)
    rs = np.geomspace(1e-2, 20.0, 12)
    masks = regime_partition(STABLE, ts, rs)
    total = sum(mask.astype(int) for mask in masks.values())
    assert np.all(total == 1)


def test_regime_structure_follows_curves():
    ts = np.geomspace(1e-3, 10.0, 20)
    rs = np.geomspace(1e-2, 20.0, 20)
    for exp in (STABLE, LOG_STABLE, LOG_BROWNIAN):
        out = check_regime_structure(exp, 1, ts, rs)
        assert out["ok"], (exp.name, out["stray_cells"][:5])


def test_jump_dominance_constant_finite():
    for exp in (STABLE, LOG_STABLE, LOG_BROWNIAN):
        c3 = jump_dominance_constant(exp, 1, R=1.0, T=1.0)
        assert math.isfinite(c3)
        assert c3 > 0.0


# --- report plumbing -------------------------------------------------------------------

def test_report_validation_and_json():
    rep = ComparabilityReport("r", 0.5, 2.0, (1.0, 1.0), (2.0, 2.0), 10)
    assert rep.c_outer == 2.0
    assert rep.spread == 4.0
    js = rep.to_json()
    assert js["region"] == "r"
    with pytest.raises(ArgumentError):
        ComparabilityReport("r", 2.0, 0.5, (), (), 4)


@given(st.floats(min_value=1e-3, max_value=1e3),
       st.floats(min_value=1.0, max_value=100.0))
@settings(max_examples=40, deadline=None)
def test_report_c_outer_bounds_both_sides(inf, spread):
    rep = ComparabilityReport("h", inf, inf * spread, (), (), 3)
    c = rep.c_outer
    assert rep.sup_ratio <= c
    assert rep.inf_ratio >= 1.0 / c
