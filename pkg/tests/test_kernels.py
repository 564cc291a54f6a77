import math

import numpy as np
import pytest

from sbmlab.bernstein import builtin_exponent
from sbmlab.errors import (
    ArgumentError,
    CapabilityError,
    SingularityError,
    SpecError,
)
from sbmlab.kernels import (
    DensityQuery,
    DensityTable,
    build_density_table,
    chapman_kolmogorov_residual,
    free_density_fourier,
    free_density_subordination,
    free_green,
    gaussian_kernel,
    levy_density,
    radial_mass,
    _fourier_weighted,
)
from sbmlab.subordinator import law_for

STABLE = builtin_exponent("stable-0.5")
STUB = builtin_exponent("gaussian-stub")
LOG_BROWNIAN = builtin_exponent("log-brownian")


def cauchy_density(t, r):
    # pure-jump part of the stable-0.5 spec in d = 1
    return (1.0 / math.pi) * t / (t * t + r * r)


# --- gaussian_kernel ---------------------------------------------------------

def test_gaussian_trivials():
    assert gaussian_kernel(DensityQuery(1, 1.0 / (4.0 * math.pi), 0.0)) == pytest.approx(1.0, rel=1e-14)
    assert gaussian_kernel(DensityQuery(2, 1.0, 2.0)) == pytest.approx(
        math.exp(-1.0) / (4.0 * math.pi), rel=1e-14
    )
    assert gaussian_kernel(DensityQuery(3, 0.25, 1.0)) == pytest.approx(
        math.pi**-1.5 * math.exp(-1.0), rel=1e-14
    )


def test_gaussian_underflow_returns_zero():
    assert gaussian_kernel(DensityQuery(1, 1e-3, 20.0)) == 0.0


def test_query_validation():
    with pytest.raises(ArgumentError):
        DensityQuery(6, 1.0, 0.0)
    with pytest.raises(ArgumentError):
        DensityQuery(1, 0.0, 0.0)
    with pytest.raises(ArgumentError):
        DensityQuery(1, 1.0, -1.0)


# --- Fourier route -------------------------------------------------------------

def test_stub_reduces_to_gaussian_all_dims():
    for (d, t, r) in ((1, 1.0, 1.0), (2, 0.5, 1.3), (3, 0.25, 1.0),
                      (4, 0.7, 2.0), (5, 0.3, 0.8), (3, 0.1, 0.0)):
        q = DensityQuery(d, t, r)
        got = free_density_fourier(STUB, q, "p")
        want = gaussian_kernel(q)
        assert got == pytest.approx(want, rel=1e-9), (d, t, r)


def test_pure_jump_needs_nonzero_phi():
    with pytest.raises(SpecError):
        free_density_fourier(STUB, DensityQuery(1, 1.0, 1.0), "q")


def test_cauchy_closed_form():
    # phi(lam) = sqrt(lam) makes the jump part a Cauchy process in d = 1
    for (t, r) in ((1.0, 0.0), (1.0, 1.0), (0.05, 5.0), (2.0, 0.3)):
        got = free_density_fourier(STABLE, DensityQuery(1, t, r), "q")
        assert got == pytest.approx(cauchy_density(t, r), rel=1e-6), (t, r)


def test_cauchy_2d_closed_form():
    # d = 2 rotationally invariant Cauchy: t/(2 pi) (t^2 + r^2)^{-3/2}
    t, r = 0.1, 3.0
    got = free_density_fourier(STABLE, DensityQuery(2, t, r), "q")
    want = t / (2.0 * math.pi) * (t * t + r * r) ** -1.5
    assert got == pytest.approx(want, rel=1e-6)


def test_radial_monotonicity():
    for which in ("p", "q"):
        rs = np.linspace(0.0, 5.0, 11)
        vals = [free_density_fourier(STABLE, DensityQuery(1, 0.3, float(r)), which)
                for r in rs]
        assert np.all(np.diff(vals) <= 1e-9 * np.abs(vals[:-1]))


def test_upper_bound_by_on_diagonal_gaussian():
    # p(t, x) <= exp(|x|^2/4t) p2(t, x), i.e. p(t, r) <= (4 pi t)^{-d/2}
    for (d, t, r) in ((1, 0.05, 5.0), (1, 2.0, 0.0), (3, 0.01, 10.0), (1, 1e-3, 20.0)):
        p = free_density_fourier(STABLE, DensityQuery(d, t, r), "p")
        assert p <= (4.0 * math.pi * t) ** (-d / 2.0) * (1.0 + 1e-12)


def test_gaussian_domination_small_r():
    # p(t, x) >= c (4 pi t)^{-d/2} e^{-r^2/t} where t phi(r^-2) <= 1; c > 0
    ratios = []
    for t in (0.05, 0.2, 1.0):
        for r in (0.0, 0.5, 1.0, 2.0):
            if r > 0.0 and t * STABLE.phi(r**-2) > 1.0:
                continue
            p = free_density_fourier(STABLE, DensityQuery(1, t, r), "p")
            hat = (4.0 * math.pi * t) ** -0.5 * math.exp(-r * r / t)
            ratios.append(p / hat)
    assert min(ratios) > 0.1  # measured constant, comfortably positive


# --- subordination route -------------------------------------------------------

def test_dual_route_agreement_spot():
    for (t, r) in ((0.05, 5.0), (0.54, 1.25), (2.0, 0.0)):
        q = DensityQuery(1, t, r)
        a = free_density_fourier(STABLE, q, "p")
        b = free_density_subordination(STABLE, q, "p")
        assert b == pytest.approx(a, rel=1e-5), (t, r)


def test_dual_route_pure_jump():
    q = DensityQuery(1, 0.5, 1.0)
    a = free_density_fourier(STABLE, q, "q")
    b = free_density_subordination(STABLE, q, "q")
    assert b == pytest.approx(a, rel=1e-5)


def test_normalization_radial_mass():
    assert radial_mass(STABLE, 1, 0.5, "p", route="fourier") == pytest.approx(
        1.0, abs=1e-5
    )
    assert radial_mass(STABLE, 1, 0.5, "p", route="subordination") == pytest.approx(
        1.0, abs=1e-5
    )


def test_chapman_kolmogorov():
    assert chapman_kolmogorov_residual(STABLE, 0.3, 0.7, 1.0) < 1e-4


# --- Levy density ----------------------------------------------------------------

def test_levy_density_cauchy_value():
    # j(r) = 1/(pi r^2) for the stable-0.5 spec in d = 1
    assert levy_density(STABLE, 1, 2.0) == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-8)
    assert levy_density(STABLE, 1, 0.5) == pytest.approx(1.0 / (0.25 * math.pi), rel=1e-8)


def test_levy_density_H_comparison():
    # j(r) r^d / H(r^-2) stays in a bounded band
    ratios = []
    for r in np.geomspace(0.01, 1.0, 7):
        j = levy_density(STABLE, 1, float(r))
        ratios.append(j * r / STABLE.H(r**-2.0))
    assert max(ratios) / min(ratios) < 1.2  # constant for an exact power law
    assert 0.1 < min(ratios) < max(ratios) < 10.0


def test_levy_density_limit_route_agreement():
    for r in (0.7, 2.0):
        direct = levy_density(STABLE, 1, r, route="direct")
        limit = levy_density(STABLE, 1, r, route="limit")
        assert limit == pytest.approx(direct, rel=1e-3)


def test_levy_density_limit_route_log_family():
    # no explicit measure for the log families: limit route only
    j = levy_density(LOG_BROWNIAN, 1, 1.0)
    assert j > 0.0
    with pytest.raises(CapabilityError):
        levy_density(LOG_BROWNIAN, 1, 1.0, route="direct")


def test_levy_density_singularity():
    with pytest.raises(SingularityError):
        levy_density(STABLE, 1, 0.0)


# --- free Green function ----------------------------------------------------------

def test_green_newtonian_stub():
    for r in (0.5, 2.0):
        got = free_green(STUB, 3, r)
        assert got == pytest.approx(1.0 / (4.0 * math.pi * r), rel=1e-4)


def test_green_unsupported_dimension():
    with pytest.raises(CapabilityError):
        free_green(STABLE, 1, 1.0)


def test_green_resolvent_oracle():
    # independent route: G(r) = (1/(2 pi^2 r)) int s sin(s r)/psi(s^2) ds
    r = 1.5

    def g(s):
        return s / STABLE.psi(s * s)

    def dg(s):
        y = s * s
        psi = STABLE.psi(y)
        dpsi = 1.0 + STABLE.phi_prime(y)
        return 1.0 / psi - 2.0 * y * dpsi / psi**2

    cut = 1e7
    val = _fourier_weighted(g, dg, r, "sin", cut, 1e-10) / (2.0 * math.pi**2 * r)
    got = free_green(STABLE, 3, r)
    assert got == pytest.approx(val, rel=2e-3)


def test_green_envelope_band_spot():
    # G(r) / [r^-3 (r^2 ^ 1/phi(r^-2))] finite and moderate
    for r in (0.1, 1.0, 10.0):
        env = r**-3.0 * min(r * r, 1.0 / STABLE.phi(r**-2.0))
        ratio = free_green(STABLE, 3, r) / env
        assert 0.01 < ratio < 100.0


# --- density tables -----------------------------------------------------------------

def test_density_table_csv_roundtrip(tmp_path):
    ts = [0.5, 1.0]
    rs = [0.0, 1.0, 2.0]
    tab = build_density_table(STABLE, 1, ts, rs, which="q", route="fourier")
    assert tab.values.shape == (2, 3)
    # radially nonincreasing rows
    assert np.all(np.diff(tab.values, axis=1) <= 1e-9)
    path = tmp_path / "q.csv"
    tab.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "d,t,r,value,route,err"
    assert len(lines) == 1 + 6
    # byte-exact reproducibility
    tab2 = build_density_table(STABLE, 1, ts, rs, which="q", route="fourier")
    path2 = tmp_path / "q2.csv"
    tab2.to_csv(path2)
    assert path.read_bytes() == path2.read_bytes()


def test_density_table_shape_validation():
    with pytest.raises(ArgumentError):
        DensityTable(d=1, ts=[1.0], rs=[1.0, 2.0], values=np.zeros((2, 2)),
                     route="fourier", which="p", spec_id="x")
