"""Free-space transition densities of the subordinate Brownian motion.

The process has characteristic exponent E(|xi|^2) with E = psi for the full
process (Gaussian part plus jumps) and E = phi for the pure-jump part, so the
density at radius r solves a radial Fourier inversion

    d = 1:  (1/pi) int_0^inf cos(s r) exp(-t E(s^2)) ds,
    d >= 2: (2 pi)^{-d/2} r^{1-d/2}
            int_0^inf exp(-t E(s^2)) s^{d/2} J_{d/2-1}(s r) ds.

Odd dimensions reduce to sine/cosine kernels; d in {2, 4} keep a genuine
Bessel factor and are summed between its zeros with series acceleration.
The independent subordination route integrates the Gaussian kernel against
the subordinator density.  Everything uses the generator-Delta normalization
p2(t, x) = (4 pi t)^{-d/2} exp(-|x|^2 / 4t).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, special

from .bernstein import LaplaceExponent, invert_phi
from .errors import (
    ArgumentError,
    CapabilityError,
    DomainError,
    SingularityError,
    SpecError,
)
from .subordinator import SubordinatorLaw, extrapolate_table_tail, law_for

__all__ = [
    "DensityQuery",
    "DensityTable",
    "chapman_kolmogorov_residual",
    "free_density_fourier",
    "free_density_subordination",
    "free_green",
    "gaussian_kernel",
    "levy_density",
    "radial_mass",
]

_DIMS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class DensityQuery:
    """One (dimension, time, radius) evaluation point; only |x| matters."""

    d: int
    t: float
    r: float

    def __post_init__(self):
        if self.d not in _DIMS:
            raise ArgumentError(f"dimension must be in {_DIMS}")
        if not self.t > 0.0:
            raise ArgumentError("time must be positive")
        if not self.r >= 0.0:
            raise ArgumentError("radius must be nonnegative")


def gaussian_kernel(q: DensityQuery) -> float:
    """Heat kernel of the Brownian part, (4 pi t)^{-d/2} e^{-r^2/4t}."""
    arg = q.r * q.r / (4.0 * q.t)
    if arg > 745.0:
        return 0.0
    return (4.0 * math.pi * q.t) ** (-q.d / 2.0) * math.exp(-arg)


# ---------------------------------------------------------------------------
# Radial Fourier inversion


def _exponent_fn(exp: LaplaceExponent, which: str):
    spec = exp.spec
    if which == "p":
        return lambda y: y + exp.phi(y)
    if which == "q":
        if spec.form == "zero" or spec.scale == 0.0:
            raise SpecError("pure-jump density needs a nonzero phi")
        return lambda y: exp.phi(y)
    raise ArgumentError("which must be 'p' or 'q'")


def _exponent_cut(exp: LaplaceExponent, which: str, t: float) -> float:
    """Frequency s beyond which exp(-t E(s^2)) < e^-45."""
    E = _exponent_fn(exp, which)
    target = 45.0 / t
    s = 1.0
    it = 0
    while E(s * s) < target:
        s *= 2.0
        it += 1
        if it > 2000:
            raise SpecError("exponent does not grow; inversion diverges")
    lo = s / 2.0 if it else 1e-12
    for _ in range(80):
        mid = 0.5 * (lo + s)
        if E(mid * mid) < target:
            lo = mid
        else:
            s = mid
    return s


def _osc_tail(g, dg, omega: float, kind: str, lo: float, hi: float,
              abs_tol: float) -> float:
    """int_lo^hi g(s) {cos|sin}(omega s) ds by one integration by parts.

    Requires the analytic derivative dg; the boundary terms are exact and
    the remaining oscillatory integral is smaller by ~|g'|/(omega |g|).
    """
    sl, sh = math.sin(omega * lo), math.sin(omega * hi)
    cl, ch = math.cos(omega * lo), math.cos(omega * hi)
    if kind == "cos":
        bnd = (g(hi) * sh - g(lo) * sl) / omega
        w2, sign = "sin", -1.0
    else:
        bnd = -(g(hi) * ch - g(lo) * cl) / omega
        w2, sign = "cos", 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        rem, _ = integrate.quad(dg, lo, hi, weight=w2, wvar=omega,
                                epsabs=abs_tol * omega / 4.0, epsrel=1e-7,
                                limit=400)
    return bnd + sign * rem / omega


def _fourier_weighted(g, dg, omega: float, kind: str, cut: float,
                      abs_tol: float) -> float:
    """int_0^cut g(s) {cos|sin}(omega s) ds, head window + IBP remainder.

    The amplitudes here are smooth away from s = 0, so a short head window
    (the endpoint region plus a few periods) and one integration by parts
    reach the 1e-7 relative target.
    """
    u1 = min(cut, 60.0 * math.pi / omega) if omega > 0.0 else cut
    w = math.cos if kind == "cos" else math.sin

    def head_fn(s):
        return g(s) * w(omega * s)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        head, _ = integrate.quad(head_fn, 0.0, u1, epsabs=min(abs_tol / 4.0, 1e-13),
                                 epsrel=1e-9, limit=400)
    tail = 0.0
    if cut > u1:
        tail = _osc_tail(g, dg, omega, kind, u1, cut, abs_tol)
    return head + tail


def _sphere_area(d: int) -> float:
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _bessel_route(gfun, dgfun, nu: int, r: float, cut: float,
                  abs_tol: float) -> float:
    """int_0^cut g(s) J_nu(s r) ds for nu in {0, 1}.

    Partitioned at the Bessel zeros; the per-arch terms alternate, so once
    they fall below the tolerance the plain partial sum carries a remainder
    below the last term.
    """
    n_zeros = min(max(int(cut * r / math.pi) + 8, 64), 20000)
    zeros = special.jn_zeros(nu, n_zeros) / r
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        first = min(zeros[0], cut)
        total, _ = integrate.quad(lambda s: gfun(s) * special.jv(nu, s * r),
                                  0.0, first, epsabs=abs_tol / 4.0,
                                  epsrel=1e-10, limit=200)
        if cut <= zeros[0]:
            return total
        prev = zeros[0]
        for z in zeros[1:]:
            hi = min(z, cut)
            val, _ = integrate.quad(
                lambda s: gfun(s) * special.jv(nu, s * r), prev, hi,
                epsabs=abs_tol / 8.0, epsrel=1e-10, limit=100,
            )
            total += val
            prev = hi
            if hi >= cut:
                break
            if abs(val) < abs_tol / 8.0:
                break
        else:
            raise SpecError("Bessel arch budget exhausted before the cutoff")
    return total


def free_density_fourier(exp: LaplaceExponent, q: DensityQuery,
                         which: str = "p") -> float:
    """Density by radial Fourier inversion of exp(-t E(s^2)).

    which='p' uses E = psi (full process), which='q' uses E = phi (pure-jump
    part).  Relative target 1e-7 with an absolute floor of 1e-12.
    """
    E = _exponent_fn(exp, which)
    d, t, r = q.d, q.t, q.r
    cut = _exponent_cut(exp, which, t)
    scale = (t * 4 * math.pi) ** (-d / 2.0)
    abs_tol = max(1e-9 * scale, 1e-14)

    spec = exp.spec

    def phi_prime_total(y):
        base = 1.0 if which == "p" else 0.0
        return base + exp.phi_prime(y)

    if r == 0.0:
        coeff = _sphere_area(d) / (2.0 * math.pi) ** d

        def mom(s):
            return s ** (d - 1) * math.exp(-t * E(s * s))

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(mom, 0.0, cut, epsabs=abs_tol,
                                    epsrel=1e-10, limit=400)
        return max(coeff * val, 0.0)

    def g_pow(k):
        def g(s):
            return s**k * math.exp(-t * E(s * s))

        def dg(s):
            e = math.exp(-t * E(s * s))
            lead = k * s ** (k - 1) if k > 0 else 0.0
            return (lead - 2.0 * t * s ** (k + 1) * phi_prime_total(s * s)) * e

        return g, dg

    if d == 1:
        g, dg = g_pow(0)
        val = _fourier_weighted(g, dg, r, "cos", cut, abs_tol) / math.pi
    elif d == 3:
        g, dg = g_pow(1)
        val = _fourier_weighted(g, dg, r, "sin", cut, abs_tol * r) / (
            2.0 * math.pi**2 * r
        )
    elif d == 5:
        g1, dg1 = g_pow(1)
        g2, dg2 = g_pow(2)
        i1 = _fourier_weighted(g1, dg1, r, "sin", cut, abs_tol * r**3)
        i2 = _fourier_weighted(g2, dg2, r, "cos", cut, abs_tol * r**2)
        val = (i1 / r - i2) / (4.0 * math.pi**3 * r**2)
    else:  # d in {2, 4}
        nu = d // 2 - 1
        k = d // 2
        g, dg = g_pow(k)
        coeff = (2.0 * math.pi) ** (-d / 2.0) * r ** (1 - d / 2.0)
        val = coeff * _bessel_route(g, dg, nu, r, cut, abs_tol / max(coeff, 1e-300))
    return max(val, 0.0)


# ---------------------------------------------------------------------------
# Subordination route


def free_density_subordination(exp: LaplaceExponent, q: DensityQuery,
                               which: str = "p",
                               law: Optional[SubordinatorLaw] = None) -> float:
    """Density by mixing the Gaussian kernel over the subordinator law.

    which='p' integrates (4 pi s)^{-d/2} e^{-r^2/4s} against the law of
    S_t = t + T_t, which='q' against T_t alone.  Relative target 1e-6.
    """
    d, t, r = q.d, q.t, q.r
    if law is None:
        law = law_for(exp, t)
    if law.t != t:
        raise ArgumentError("law built for a different time")
    tab = law.quadrature_table()
    shift = t if which == "p" else 0.0
    if which not in ("p", "q"):
        raise ArgumentError("which must be 'p' or 'q'")
    s = tab["nodes"] + shift
    gauss = np.where(
        r * r / (4.0 * s) < 745.0,
        (4.0 * math.pi * s) ** (-d / 2.0) * np.exp(-r * r / (4.0 * s)),
        0.0,
    )
    contribs = tab["weights"] * tab["density"] * gauss
    val = float(np.sum(contribs))
    U = float(tab["nodes"][-1])
    s_peak = r * r / (2.0 * d)

    def g_of(u):
        sv = u + shift
        a = r * r / (4.0 * sv)
        if a > 745.0:
            return 0.0
        return (4.0 * math.pi * sv) ** (-d / 2.0) * math.exp(-a)

    # tail beyond the table: skip when the certified cap is negligible,
    # continue the panel sums geometrically when they decay, and fall back
    # to a weighted density march when the Gaussian peak lies past the table
    cap = g_of(max(U, s_peak - shift)) * tab["tail_prob"]
    if cap <= 1e-9 * max(val, 1e-300):
        return val + 0.5 * cap
    if s_peak <= 0.25 * (U + shift):
        panel = contribs.reshape(-1, tab["nodes_per_panel"]).sum(axis=1)
        return val + extrapolate_table_tail(panel, g_of(U) * tab["tail_prob"])
    return val + law.tail_weighted_integral(U, g_of)


def radial_mass(exp: LaplaceExponent, d: int, t: float, which: str = "p",
                route: str = "fourier") -> float:
    """Total mass of the density by radial quadrature (should be 1).

    The Fourier route integrates the jump tail out by doubling panels with a
    geometric remainder; the subordination route integrates to a moderate
    radius and accounts for the rest by mixing the exact Gaussian tail
    probability over the subordinator law.
    """
    area = _sphere_area(d)
    if route == "subordination":
        law = law_for(exp, t)

        def call(r):
            return free_density_subordination(exp, DensityQuery(d, t, r), which,
                                              law=law)

        R = 10.0 * math.sqrt(t)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            head, _ = integrate.quad(lambda r: r ** (d - 1) * call(r), 0.0, R,
                                     epsrel=1e-7, epsabs=1e-12, limit=200)
        tab = law.quadrature_table()
        shift = t if which == "p" else 0.0
        s = tab["nodes"] + shift
        # P(|X_t| > R | S_t = s) for the d-dimensional Gaussian
        cond = special.gammaincc(d / 2.0, R * R / (4.0 * s))
        tail = float(np.sum(tab["weights"] * tab["density"] * cond))
        tail += tab["tail_prob"]  # conditional tail ~ 1 far out
        return area * head + tail

    def call(r):
        return free_density_fourier(exp, DensityQuery(d, t, r), which)

    # split at the diffusive scale; the jump tail is polynomially heavy
    r0 = math.sqrt(t)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        head, _ = integrate.quad(lambda r: r ** (d - 1) * call(r), 0.0, 8.0 * r0,
                                 epsrel=1e-8, epsabs=1e-12, limit=200)
    total = head
    a = 8.0 * r0
    prev = None
    for _ in range(40):
        b = 2.0 * a
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            part, _ = integrate.quad(lambda r: r ** (d - 1) * call(r), a, b,
                                     epsrel=1e-7, epsabs=1e-13, limit=100)
        total += part
        if prev is not None and 0.0 < part < 0.9 * prev:
            ratio = part / prev
            if part * ratio / (1.0 - ratio) < 1e-8:
                total += part * ratio / (1.0 - ratio)
                break
        if abs(part) < 1e-10:
            break
        prev = part
        a = b
    return area * total


# ---------------------------------------------------------------------------
# Levy density of the jump part


def _stable_levy_measure(alpha: float, scale: float):
    c = scale * alpha / math.gamma(1.0 - alpha)
    return lambda u: c * u ** (-1.0 - alpha)


def levy_density(exp: LaplaceExponent, d: int, r: float,
                 route: str = "auto") -> float:
    """Jump kernel j(r) of the subordinate Brownian motion.

    With an explicit Levy density m of the subordinator this is the mixture
    integral int (4 pi u)^{-d/2} e^{-r^2/4u} m(u) du; otherwise the small
    time limit q(t, r)/t is extrapolated in t (Richardson with steps t, t/2,
    t/4 starting at t = 1e-3).
    """
    if r <= 0.0:
        raise SingularityError("levy density diverges at r = 0")
    spec = exp.spec
    if route == "auto":
        route = "direct" if spec.form in ("stable", "levy_measure") else "limit"
    if route == "direct":
        if spec.form == "stable":
            m = _stable_levy_measure(spec.alpha, spec.scale)
        elif spec.form == "levy_measure":
            m = spec.levy_density
        else:
            raise CapabilityError("no explicit Levy measure for this spec")

        def integrand(u):
            a = r * r / (4.0 * u)
            if a > 745.0:
                return 0.0
            return (4.0 * math.pi * u) ** (-d / 2.0) * math.exp(-a) * m(u)

        peak = r * r / (2.0 * d + 2.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            head, _ = integrate.quad(integrand, 0.0, 4.0 * peak,
                                     points=[peak], epsrel=1e-10, epsabs=0.0,
                                     limit=400)
            tail, _ = integrate.quad(integrand, 4.0 * peak, np.inf,
                                     epsrel=1e-10, epsabs=head * 1e-12,
                                     limit=400)
        return head + tail
    # limit route: j = lim q(t, r)/t with quadratic Richardson
    t0 = 1e-3
    v = [free_density_fourier(exp, DensityQuery(d, t0 / 2.0**k, r), "q")
         / (t0 / 2.0**k) for k in range(3)]
    return (8.0 * v[2] - 6.0 * v[1] + v[0]) / 3.0


# ---------------------------------------------------------------------------
# Free Green function (transient case)


def free_green(exp: LaplaceExponent, d: int, r: float,
               rel_tol: float = 1e-4) -> float:
    """G(r) = int_0^inf p(t, r) dt for d >= 3.

    Adaptive time quadrature of the Fourier-route density split at t = r^2
    and t = 1/phi(r^-2); beyond an adaptively grown horizon the integrand is
    replaced by its envelope (4 pi t)^{-d/2} and the certified remainder is
    added.
    """
    if d < 3:
        raise CapabilityError("free Green function needs d >= 3 (transience)")
    if not r > 0.0:
        raise DomainError("radius must be positive")

    def p_of_t(t):
        return free_density_fourier(exp, DensityQuery(d, t, r), "p")

    if exp.spec.form == "zero" or exp.spec.scale == 0.0:
        t_jump = r * r
    else:
        t_jump = 1.0 / exp.phi(r**-2)
    t1, t2 = sorted((r * r, t_jump))
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        part, _ = integrate.quad(p_of_t, 0.0, t1, epsrel=rel_tol / 10.0,
                                 epsabs=0.0, limit=200)
        total += part
        if t2 > t1:
            part, _ = integrate.quad(p_of_t, t1, t2, epsrel=rel_tol / 10.0,
                                     epsabs=total * rel_tol / 10.0, limit=200)
            total += part
    # grow the horizon until the Gaussian-cap remainder is negligible
    t_max = t2
    gauss_tail = lambda T: (4.0 * math.pi) ** (-d / 2.0) * T ** (1.0 - d / 2.0) / (
        d / 2.0 - 1.0
    )
    while gauss_tail(t_max) > 0.25 * rel_tol * total:
        t_hi = 8.0 * t_max
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            part, _ = integrate.quad(p_of_t, t_max, t_hi,
                                     epsrel=rel_tol / 10.0,
                                     epsabs=total * rel_tol / 20.0, limit=100)
        total += part
        t_max = t_hi
        if t_max > 1e18:
            break
    total += gauss_tail(t_max)  # certified remainder bound
    return total


# ---------------------------------------------------------------------------
# Consistency helpers


def chapman_kolmogorov_residual(exp: LaplaceExponent, s: float, t: float,
                                x: float) -> float:
    """Relative gap in int p(s, x-z) p(t, z) dz = p(s+t, x) for d = 1."""
    target = free_density_fourier(exp, DensityQuery(1, s + t, abs(x)), "p")

    def integrand(z):
        a = free_density_fourier(exp, DensityQuery(1, s, abs(x - z)), "p")
        b = free_density_fourier(exp, DensityQuery(1, t, abs(z)), "p")
        return a * b

    half = 8.0 * math.sqrt(s + t) + 2.0 * abs(x)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        conv, _ = integrate.quad(integrand, -half, half, epsrel=1e-7,
                                 epsabs=1e-12, limit=200)
    # polynomial tails beyond the window are below the comparison tolerance
    return abs(conv - target) / target


# ---------------------------------------------------------------------------
# Density tables


@dataclass
class DensityTable:
    """Sampled density values on a (t, r) grid with provenance."""

    d: int
    ts: np.ndarray
    rs: np.ndarray
    values: np.ndarray          # shape (len(ts), len(rs))
    route: str                  # gaussian | fourier | subordination | levy_limit
    which: str                  # p | q | p2
    spec_id: str
    errors: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ts = np.asarray(self.ts, dtype=float)
        self.rs = np.asarray(self.rs, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.ts), len(self.rs)):
            raise ArgumentError("values shape must match the (t, r) grid")

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("d,t,r,value,route,err\n")
            errs = self.errors
            for i, t in enumerate(self.ts):
                for j, r in enumerate(self.rs):
                    err = float(errs[i, j]) if errs is not None else 0.0
                    fh.write(f"{self.d},{t!r},{r!r},{self.values[i, j]!r},"
                             f"{self.route},{err!r}\n")

    def sidecar(self) -> dict:
        return {
            "d": self.d,
            "route": self.route,
            "which": self.which,
            "spec_id": self.spec_id,
            "n_t": len(self.ts),
            "n_r": len(self.rs),
            "meta": self.meta,
        }


def build_density_table(exp: LaplaceExponent, d: int, ts, rs,
                        which: str = "p", route: str = "fourier",
                        spec_id: str = "") -> DensityTable:
    """Evaluate a density on the full (t, r) grid by the requested route."""
    ts = np.asarray(ts, dtype=float)
    rs = np.asarray(rs, dtype=float)
    vals = np.empty((len(ts), len(rs)))
    for i, t in enumerate(ts):
        law = None
        if route == "subordination":
            law = law_for(exp, float(t))
        for j, r in enumerate(rs):
            qq = DensityQuery(d, float(t), float(r))
            if route == "gaussian":
                vals[i, j] = gaussian_kernel(qq)
            elif route == "fourier":
                vals[i, j] = free_density_fourier(exp, qq, which)
            elif route == "subordination":
                vals[i, j] = free_density_subordination(exp, qq, which, law=law)
            else:
                raise ArgumentError(f"unknown route {route!r}")
    return DensityTable(d=d, ts=ts, rs=rs, values=vals, route=route,
                        which=which, spec_id=spec_id or exp.name)
