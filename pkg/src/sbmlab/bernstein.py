"""Laplace exponents psi(lam) = lam + phi(lam) of subordinators with unit drift.

phi is a driftless Bernstein function, either one of the built-in closed-form
families or given through its Levy density m on (0, infinity) via

    phi(lam) = integral_0^inf (1 - exp(-lam*t)) m(t) dt.

The module evaluates phi, phi', H(lam) = phi(lam) - lam*phi'(lam), psi, a
numerical inverse of phi, and certifies two-sided power-law scaling bounds

    C_L * x**gamma <= f(lam*x)/f(lam) <= C_U * x**delta,   lam > a, x >= 1

on finite log grids.  Certification is grid-relative: the bounds are checked
at every examined pair and nowhere else.

Built-in families (phi may carry a positive prefactor ``scale``):

    stable         phi(lam) = lam**alpha,                  alpha in (0, 1)
    log_stable     phi(lam) = lam / log(1 + lam**(beta/2)), beta in (0, 2)
    log_brownian   phi(lam) = lam / log(1 + lam) - 1
    zero           phi == 0 (degenerate Gaussian stub)
    levy_measure   phi from a user-supplied Levy density
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize

from .errors import (
    ArgumentError,
    CapabilityError,
    ConsistencyError,
    DomainError,
    IntegrabilityError,
    RangeError,
    SpecError,
)

__all__ = [
    "BernsteinSpec",
    "LaplaceExponent",
    "ScalingWitness",
    "builtin_exponent",
    "certify_scaling",
    "eval_H",
    "eval_phi",
    "invert_phi",
    "richardson_derivative",
    "shift_threshold",
]

# Smallest lambda accepted by the evaluators; below this phi underflows to 0.
LAM_FLOOR = 1e-300

_FORMS = ("stable", "log_stable", "log_brownian", "zero", "levy_measure")


@dataclass(frozen=True)
class BernsteinSpec:
    """Specification of a driftless Bernstein function.

    ``scale`` multiplies phi; scale values far below 1 give near-degenerate
    stubs used for limit checks.  ``levy_density`` is required only for the
    ``levy_measure`` form and must be integrable against (1 and t) near 0 and
    infinity.
    """

    form: str
    alpha: Optional[float] = None
    beta: Optional[float] = None
    scale: float = 1.0
    levy_density: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, compare=False
    )
    quad_rtol: float = 1e-11
    name: Optional[str] = None

    def __post_init__(self):
        if self.form not in _FORMS:
            raise ArgumentError(f"unknown form {self.form!r}")
        if self.form == "stable":
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ArgumentError("stable form needs alpha in (0, 1)")
        if self.form == "log_stable":
            if self.beta is None or not 0.0 < self.beta < 2.0:
                raise ArgumentError("log_stable form needs beta in (0, 2)")
        if self.form == "levy_measure" and self.levy_density is None:
            raise ArgumentError("levy_measure form needs a density callable")
        if not self.scale >= 0.0:
            raise ArgumentError("scale must be nonnegative")

    @property
    def analytic_derivative_available(self) -> bool:
        return self.form in ("stable", "log_stable", "log_brownian", "zero", "levy_measure")

    @property
    def has_complex_extension(self) -> bool:
        """Whether phi extends to the inversion contour Re z >= 0."""
        return self.form in ("stable", "log_stable", "log_brownian", "zero")

    def to_json(self) -> dict:
        if self.form == "levy_measure":
            raise CapabilityError("levy_measure specs with callables do not serialize")
        params = {}
        if self.alpha is not None:
            params["alpha"] = self.alpha
        if self.beta is not None:
            params["beta"] = self.beta
        if self.scale != 1.0:
            params["scale"] = self.scale
        return {"form": self.form, "params": params}

    @staticmethod
    def from_json(obj: dict) -> "BernsteinSpec":
        params = dict(obj.get("params", {}))
        return BernsteinSpec(form=obj["form"], **params)


def _as_array(lam):
    arr = np.asarray(lam, dtype=float)
    if np.any(arr <= 0.0):
        raise DomainError("lambda must be positive")
    return arr


# ---------------------------------------------------------------------------
# Closed-form families.  Series branches keep the log_brownian subtractions
# accurate for tiny lambda.

_LB_SERIES_CUT = 1e-5


def _phi_log_brownian(lam):
    lam = np.asarray(lam, dtype=float)
    small = lam < _LB_SERIES_CUT
    out = np.empty_like(lam)
    ls = lam[small]
    out[small] = ls / 2.0 - ls**2 / 12.0 + ls**3 / 24.0
    lb = lam[~small]
    out[~small] = lb / np.log1p(lb) - 1.0
    return out


def _dphi_log_brownian(lam):
    lam = np.asarray(lam, dtype=float)
    small = lam < _LB_SERIES_CUT
    out = np.empty_like(lam)
    ls = lam[small]
    out[small] = 0.5 - ls / 6.0 + ls**2 / 8.0
    lb = lam[~small]
    L = np.log1p(lb)
    out[~small] = 1.0 / L - lb / ((1.0 + lb) * L**2)
    return out


def _H_log_brownian(lam):
    lam = np.asarray(lam, dtype=float)
    small = lam < 1e-4
    out = np.empty_like(lam)
    ls = lam[small]
    out[small] = ls**2 / 12.0 * (1.0 - ls)
    lb = lam[~small]
    L = np.log1p(lb)
    out[~small] = lb**2 / ((1.0 + lb) * L**2) - 1.0
    return out


def _phi_log_stable(lam, beta):
    lam = np.asarray(lam, dtype=float)
    u = lam ** (beta / 2.0)
    return lam / np.log1p(u)


def _dphi_log_stable(lam, beta):
    lam = np.asarray(lam, dtype=float)
    u = lam ** (beta / 2.0)
    L = np.log1p(u)
    return 1.0 / L - (beta / 2.0) * u / ((1.0 + u) * L**2)


def _H_log_stable(lam, beta):
    lam = np.asarray(lam, dtype=float)
    u = lam ** (beta / 2.0)
    L = np.log1p(u)
    return (beta / 2.0) * lam * u / ((1.0 + u) * L**2)


def _phi_levy(spec: BernsteinSpec, lam: float) -> float:
    m = spec.levy_density
    lam = float(lam)
    split = 1.0 / lam

    def integrand(t):
        return -np.expm1(-lam * t) * m(t)

    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            head, eh = integrate.quad(integrand, 0.0, split, epsrel=spec.quad_rtol,
                                      epsabs=0.0, limit=200)
            tail, et = integrate.quad(integrand, split, np.inf, epsrel=spec.quad_rtol,
                                      epsabs=abs(head) * spec.quad_rtol, limit=200)
        except integrate.IntegrationWarning as exc:
            raise IntegrabilityError(
                "Levy integral for phi does not converge"
            ) from exc
    val = head + tail
    if not math.isfinite(val):
        raise IntegrabilityError("Levy integral for phi does not converge")
    return val


def _dphi_levy(spec: BernsteinSpec, lam: float) -> float:
    m = spec.levy_density
    lam = float(lam)

    def integrand(t):
        return t * np.exp(-lam * t) * m(t)

    split = 1.0 / lam
    head, _ = integrate.quad(integrand, 0.0, split, epsrel=spec.quad_rtol,
                             epsabs=0.0, limit=200)
    tail, _ = integrate.quad(integrand, split, np.inf, epsrel=spec.quad_rtol,
                             epsabs=abs(head) * spec.quad_rtol, limit=200)
    val = head + tail
    if not math.isfinite(val):
        raise IntegrabilityError("Levy integral for phi' does not converge")
    return val


def _phi_scalar(spec: BernsteinSpec, lam: float) -> float:
    if lam <= 0.0:
        raise DomainError("lambda must be positive")
    if lam < LAM_FLOOR:
        lam = LAM_FLOOR
    form = spec.form
    if form == "stable":
        return spec.scale * lam**spec.alpha
    if form == "log_brownian":
        if lam < _LB_SERIES_CUT:
            return spec.scale * (lam / 2.0 - lam * lam / 12.0 + lam**3 / 24.0)
        return spec.scale * (lam / math.log1p(lam) - 1.0)
    if form == "log_stable":
        return spec.scale * lam / math.log1p(lam ** (spec.beta / 2.0))
    if form == "zero":
        return 0.0
    return spec.scale * _phi_levy(spec, lam)


def _dphi_scalar(spec: BernsteinSpec, lam: float) -> float:
    if lam <= 0.0:
        raise DomainError("lambda must be positive")
    form = spec.form
    if form == "stable":
        return spec.scale * spec.alpha * lam ** (spec.alpha - 1.0)
    if form == "log_brownian":
        if lam < _LB_SERIES_CUT:
            return spec.scale * (0.5 - lam / 6.0 + lam * lam / 8.0)
        L = math.log1p(lam)
        return spec.scale * (1.0 / L - lam / ((1.0 + lam) * L * L))
    if form == "log_stable":
        u = lam ** (spec.beta / 2.0)
        L = math.log1p(u)
        return spec.scale * (1.0 / L - (spec.beta / 2.0) * u / ((1.0 + u) * L * L))
    if form == "zero":
        return 0.0
    return spec.scale * _dphi_levy(spec, lam)


def _H_scalar(spec: BernsteinSpec, lam: float) -> float:
    if lam <= 0.0:
        raise DomainError("lambda must be positive")
    form = spec.form
    if form == "stable":
        return spec.scale * (1.0 - spec.alpha) * lam**spec.alpha
    if form == "log_brownian":
        if lam < 1e-4:
            return spec.scale * lam * lam / 12.0 * (1.0 - lam)
        L = math.log1p(lam)
        return spec.scale * (lam * lam / ((1.0 + lam) * L * L) - 1.0)
    if form == "log_stable":
        u = lam ** (spec.beta / 2.0)
        L = math.log1p(u)
        return spec.scale * (spec.beta / 2.0) * lam * u / ((1.0 + u) * L * L)
    if form == "zero":
        return 0.0
    return _phi_scalar(spec, lam) - lam * _dphi_scalar(spec, lam)


def eval_phi(spec: BernsteinSpec, lam):
    """Evaluate phi(lam) for positive scalar or array lam.

    Closed forms are exact; the levy_measure form uses adaptive quadrature
    with relative target ``spec.quad_rtol``.  Values below the underflow
    threshold come back as 0.0.
    """
    if np.ndim(lam) == 0 and isinstance(lam, (int, float)):
        return _phi_scalar(spec, float(lam))
    arr = _as_array(lam)
    arr = np.where(arr < LAM_FLOOR, LAM_FLOOR, arr)
    if spec.form == "zero":
        out = np.zeros_like(arr)
    elif spec.form == "stable":
        out = arr**spec.alpha
    elif spec.form == "log_stable":
        out = _phi_log_stable(arr, spec.beta)
    elif spec.form == "log_brownian":
        out = _phi_log_brownian(arr)
    else:
        out = np.vectorize(lambda v: _phi_levy(spec, v))(arr)
    out = spec.scale * out
    return out if np.ndim(lam) else float(out)


def eval_phi_prime(spec: BernsteinSpec, lam):
    """Evaluate phi'(lam); analytic for every built-in family."""
    if np.ndim(lam) == 0 and isinstance(lam, (int, float)):
        return _dphi_scalar(spec, float(lam))
    arr = _as_array(lam)
    if spec.form == "zero":
        out = np.zeros_like(arr)
    elif spec.form == "stable":
        out = spec.alpha * arr ** (spec.alpha - 1.0)
    elif spec.form == "log_stable":
        out = _dphi_log_stable(arr, spec.beta)
    elif spec.form == "log_brownian":
        out = _dphi_log_brownian(arr)
    else:
        out = np.vectorize(lambda v: _dphi_levy(spec, v))(arr)
    out = spec.scale * out
    return out if np.ndim(lam) else float(out)


def eval_phi_complex(spec: BernsteinSpec, z):
    """Evaluate phi on the closed right half-plane (principal branches).

    Needed by the subordinator transform inversion.  Raises CapabilityError
    for specs without a declared complex extension.
    """
    if not spec.has_complex_extension:
        raise CapabilityError(f"{spec.form} spec has no complex extension")
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if spec.form == "zero":
        out = np.zeros_like(z)
    elif spec.form == "stable":
        out = z**spec.alpha
    elif spec.form == "log_stable":
        u = z ** (spec.beta / 2.0)
        out = z / np.log(1.0 + u)
    else:  # log_brownian
        out = np.empty_like(z)
        small = np.abs(z) < _LB_SERIES_CUT
        zs = z[small]
        out[small] = zs / 2.0 - zs**2 / 12.0 + zs**3 / 24.0
        zb = z[~small]
        out[~small] = zb / np.log(1.0 + zb) - 1.0
    out = spec.scale * out
    return out[0] if scalar else out


def richardson_derivative(f: Callable[[float], float], lam: float,
                          rel_target: float = 1e-8, max_level: int = 10) -> float:
    """Richardson-extrapolated central difference of f at lam.

    The step is relative to lam; extrapolation stops once two successive
    diagonal entries agree to ``rel_target``.
    """
    h = 0.05 * lam
    table = []
    prev = None
    for k in range(max_level):
        hk = h / 2.0**k
        d = (f(lam + hk) - f(lam - hk)) / (2.0 * hk)
        row = [d]
        if table:
            last = table[-1]
            for m in range(1, len(last) + 1):
                fac = 4.0**m
                row.append((fac * row[m - 1] - last[m - 1]) / (fac - 1.0))
        table.append(row)
        cur = row[-1]
        if prev is not None and abs(cur - prev) <= rel_target * max(abs(cur), 1e-300):
            return cur
        prev = cur
    return prev


@dataclass(frozen=True)
class LaplaceExponent:
    """The pair (unit drift, phi) with derived evaluators.

    psi(lam) = lam + phi(lam) holds exactly; H(lam) = phi(lam) - lam*phi'(lam)
    is evaluated from the analytic derivative when available, otherwise by
    Richardson extrapolation.
    """

    spec: BernsteinSpec

    def phi(self, lam):
        return eval_phi(self.spec, lam)

    def phi_prime(self, lam):
        if self.spec.analytic_derivative_available:
            return eval_phi_prime(self.spec, lam)
        arr = _as_array(lam)
        out = np.vectorize(
            lambda v: richardson_derivative(lambda u: eval_phi(self.spec, u), v)
        )(arr)
        return out if np.ndim(lam) else float(out)

    def H(self, lam):
        return eval_H(self, lam)

    def psi(self, lam):
        if np.ndim(lam):
            return np.asarray(lam, dtype=float) + self.phi(lam)
        return float(lam) + self.phi(lam)

    def phi_inv(self, y):
        if np.ndim(y):
            return np.array([invert_phi(self, float(v)) for v in np.asarray(y).ravel()]).reshape(np.shape(y))
        return invert_phi(self, y)

    def phi_complex(self, z):
        return eval_phi_complex(self.spec, z)

    @property
    def name(self) -> str:
        return self.spec.name or self.spec.form


def eval_H(exp: LaplaceExponent, lam):
    """H(lam) = phi(lam) - lam*phi'(lam); nonnegative for Bernstein phi."""
    spec = exp.spec
    if np.ndim(lam) == 0 and isinstance(lam, (int, float)) and spec.form != "levy_measure":
        return _H_scalar(spec, float(lam))
    arr = _as_array(lam)
    if spec.form == "zero":
        out = np.zeros_like(arr)
    elif spec.form == "stable":
        out = spec.scale * (1.0 - spec.alpha) * arr**spec.alpha
    elif spec.form == "log_stable":
        out = spec.scale * _H_log_stable(arr, spec.beta)
    elif spec.form == "log_brownian":
        out = spec.scale * _H_log_brownian(arr)
    else:
        phi = eval_phi(spec, arr)
        dphi = exp.phi_prime(arr)
        out = phi - arr * dphi
        bad = out < -1e-8 * np.maximum(np.abs(phi), 1e-300)
        if np.any(bad):
            raise ConsistencyError(
                "H < 0 beyond tolerance: lam*phi'(lam) exceeds phi(lam)"
            )
        out = np.maximum(out, 0.0)
    return out if np.ndim(lam) else float(out)


def invert_phi(exp: LaplaceExponent, y: float) -> float:
    """Solve phi(lam) = y for lam > 0.

    Brackets by geometric doubling, solves by safeguarded bisection
    (Brent), then polishes with one Newton step when the analytic
    derivative exists.  Relative tolerance 1e-10 on phi(phi_inv(y)) = y.
    """
    if not y > 0.0:
        raise RangeError("phi_inv needs y > 0")
    spec = exp.spec
    if spec.form == "zero" or spec.scale == 0.0:
        raise RangeError("phi == 0 has no inverse")

    def g(lam):
        return eval_phi(spec, lam) - y

    lo = hi = 1.0
    glo = g(lo)
    it = 0
    while glo > 0.0:
        lo /= 8.0
        glo = g(lo)
        it += 1
        if it > 400:
            raise RangeError("y below the range of phi")
    ghi = g(hi)
    it = 0
    while ghi < 0.0:
        hi *= 8.0
        ghi = g(hi)
        it += 1
        if it > 400:
            raise RangeError("y above the range of phi")
    if lo > hi:
        lo, hi = hi, lo
    lam = optimize.brentq(g, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=200)
    if spec.analytic_derivative_available:
        d = eval_phi_prime(spec, lam)
        if d > 0.0:
            step = (eval_phi(spec, lam) - y) / d
            cand = lam - step
            if lo <= cand <= hi:
                lam = cand
    resid = abs(eval_phi(spec, lam) - y)
    if resid > 1e-10 * y:
        raise ConsistencyError("phi_inv failed to reach relative tolerance 1e-10")
    return lam


# ---------------------------------------------------------------------------
# Scaling certification


@dataclass
class ScalingWitness:
    """Grid-certified scaling bounds for a function f on (a, infinity).

    ``gamma``/``c_lower`` witness f(lam*x) >= c_lower * x**gamma * f(lam) at
    every grid pair with x > 1; ``delta``/``c_upper`` the matching upper
    bound.  Certification is grid-relative.
    """

    a: float
    gamma: Optional[float]
    c_lower: float
    delta: Optional[float]
    c_upper: float
    lam_grid: np.ndarray
    x_grid: np.ndarray
    lower_certified: bool
    upper_certified: bool
    delta_below_two: bool
    fn: Optional[Callable] = field(default=None, repr=False, compare=False)

    def to_json(self) -> dict:
        return {
            "a": self.a,
            "gamma": self.gamma,
            "c_lower": self.c_lower,
            "delta": self.delta,
            "c_upper": self.c_upper,
            "lower_certified": self.lower_certified,
            "upper_certified": self.upper_certified,
            "delta_below_two": self.delta_below_two,
            "lam_grid": [float(v) for v in self.lam_grid],
            "x_grid": [float(v) for v in self.x_grid],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


DEFAULT_LADDER = np.arange(1, 257) / 64.0


def default_scaling_grids(a: float = 0.0, n_lam: int = 64, n_x: int = 64):
    lam_lo = max(a, 1e-6) * (1.0 + 1e-9)
    lam_grid = np.geomspace(lam_lo, 1e8, n_lam)
    x_grid = np.geomspace(1.0, 1e6, n_x)
    return lam_grid, x_grid


def certify_scaling(f: Callable, a: float = 0.0,
                    lam_grid=None, x_grid=None, ladder=None) -> ScalingWitness:
    """Certify power-law scaling of f on a log grid above threshold a.

    Returns the largest ladder exponent gamma for which
    f(lam*x)/f(lam) >= x**gamma holds at every grid pair (the certified
    constant is then 1, recorded as the grid minimum clipped into (0, 1]),
    and symmetrically the smallest delta with the upper bound.  Every finite
    grid satisfies any exponent with a degenerate constant, so the unit
    constant pins the exponents; callers needing a constant at a different
    exponent can read it off the grid themselves.
    """
    if lam_grid is None or x_grid is None:
        dl, dx = default_scaling_grids(a)
        lam_grid = dl if lam_grid is None else np.asarray(lam_grid, dtype=float)
        x_grid = dx if x_grid is None else np.asarray(x_grid, dtype=float)
    else:
        lam_grid = np.asarray(lam_grid, dtype=float)
        x_grid = np.asarray(x_grid, dtype=float)
    if np.any(lam_grid <= a):
        raise ArgumentError("lam_grid must lie strictly above the threshold a")
    if np.any(x_grid < 1.0):
        raise ArgumentError("x_grid must lie in [1, infinity)")
    ladder = DEFAULT_LADDER if ladder is None else np.asarray(ladder, dtype=float)

    lam = lam_grid[:, None]
    prod = (lam * x_grid[None, :]).ravel()
    try:
        f_lam = np.asarray(f(lam_grid), dtype=float)
        f_prod = np.asarray(f(prod), dtype=float).reshape(len(lam_grid), len(x_grid))
    except (TypeError, ValueError):
        f_lam = np.array([f(v) for v in lam_grid], dtype=float)
        f_prod = np.array([f(v) for v in prod], dtype=float).reshape(
            len(lam_grid), len(x_grid)
        )
    if np.any(f_lam <= 0.0) or np.any(f_prod <= 0.0):
        raise DomainError("f must be positive on the certification grid")

    log_ratio = np.log(f_prod) - np.log(f_lam)[:, None]
    pos = x_grid > 1.0
    log_x = np.log(x_grid[pos])
    m_low = log_ratio[:, pos].min(axis=0)   # per-x worst lower slack
    m_up = log_ratio[:, pos].max(axis=0)

    fuzz = 1e-9
    gamma = None
    c_lower = 1.0
    for g in ladder:
        slack = np.min(m_low - g * log_x)
        if slack >= -fuzz:
            gamma = float(g)
            c_lower = min(1.0, float(np.exp(slack)))
        else:
            break
    delta = None
    c_upper = 1.0
    for d in ladder:
        excess = np.max(m_up - d * log_x)
        if excess <= fuzz:
            delta = float(d)
            c_upper = max(1.0, float(np.exp(excess)))
            break

    return ScalingWitness(
        a=float(a),
        gamma=gamma,
        c_lower=c_lower,
        delta=delta,
        c_upper=c_upper,
        lam_grid=lam_grid,
        x_grid=x_grid,
        lower_certified=gamma is not None,
        upper_certified=delta is not None,
        delta_below_two=(delta is not None and delta < 2.0),
        fn=f,
    )


def scaling_constant_at(witness: ScalingWitness, exponent: float, side: str) -> float:
    """Extremal grid constant for a prescribed exponent.

    side='lower' gives min over grid pairs of f(lam*x)/(f(lam)*x**exponent),
    side='upper' the max.  Useful for transferring a certified exponent to a
    related function.
    """
    f = witness.fn
    if f is None:
        raise ArgumentError("witness carries no function handle")
    lam_grid, x_grid = witness.lam_grid, witness.x_grid
    lam = lam_grid[:, None]
    prod = (lam * x_grid[None, :]).ravel()
    try:
        f_lam = np.asarray(f(lam_grid), dtype=float)
        f_prod = np.asarray(f(prod), dtype=float).reshape(len(lam_grid), len(x_grid))
    except (TypeError, ValueError):
        f_lam = np.array([f(v) for v in lam_grid], dtype=float)
        f_prod = np.array([f(v) for v in prod], dtype=float).reshape(
            len(lam_grid), len(x_grid)
        )
    pos = x_grid > 1.0
    ratio = (f_prod[:, pos] / f_lam[:, None]) / x_grid[pos][None, :] ** exponent
    return float(ratio.min()) if side == "lower" else float(ratio.max())


def shift_threshold(witness: ScalingWitness, a_new: float,
                    f: Optional[Callable] = None) -> ScalingWitness:
    """Move a witness for an increasing f from threshold b down to a_new.

    The lower constant degrades to (a_new/b)**gamma * C_L and the upper one
    to (f(b)/f(a_new)) * C_U; a_new must lie in (0, b].
    """
    b = witness.a
    if not b > 0.0:
        raise ArgumentError("threshold shift needs a witness with b > 0")
    if not 0.0 < a_new <= b:
        raise ArgumentError("a_new must lie in (0, b]")
    if a_new == b:
        return witness
    fn = f or witness.fn
    c_lower = witness.c_lower
    if witness.lower_certified:
        c_lower = (a_new / b) ** witness.gamma * witness.c_lower
    c_upper = witness.c_upper
    if witness.upper_certified:
        if fn is None:
            raise ArgumentError("upper shift needs the function handle")
        c_upper = float(fn(b)) / float(fn(a_new)) * witness.c_upper
    return replace(witness, a=float(a_new), c_lower=c_lower, c_upper=c_upper)


# ---------------------------------------------------------------------------
# Built-in spec registry

BUILTIN_SPEC_IDS = ("stable-0.5", "log-stable-1.0", "log-brownian", "gaussian-stub")


def parse_spec_id(spec_id: str) -> BernsteinSpec:
    """Parse ids like 'stable-0.5', 'log-stable-1.2', 'log-brownian',
    'gaussian-stub'."""
    if spec_id == "gaussian-stub":
        return BernsteinSpec(form="zero", name=spec_id)
    if spec_id == "log-brownian":
        return BernsteinSpec(form="log_brownian", name=spec_id)
    if spec_id.startswith("log-stable-"):
        beta = float(spec_id.removeprefix("log-stable-"))
        return BernsteinSpec(form="log_stable", beta=beta, name=spec_id)
    if spec_id.startswith("stable-"):
        alpha = float(spec_id.removeprefix("stable-"))
        return BernsteinSpec(form="stable", alpha=alpha, name=spec_id)
    raise ArgumentError(f"unknown spec id {spec_id!r}")


def builtin_exponent(spec_id: str) -> LaplaceExponent:
    return LaplaceExponent(parse_spec_id(spec_id))
