"""Frozen oracle values: the regression store for derived quantities.

Every entry recomputes its value through an independent oracle (closed
forms, high-precision root finding, direct quadrature) rather than through
the code paths it guards.  ``update`` freezes the current values,
``check`` recomputes and flags drift beyond the per-value tolerance.
"""

from __future__ import annotations

import json
import math
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .bernstein import BernsteinSpec, builtin_exponent
from .envelopes import asymptote_table

__all__ = ["FIXTURE_ORACLES", "check_store", "compute_all", "update_store"]


def _half_stable_density_oracle(qtol_scale: float = 1.0) -> float:
    # closed-form 1/2-stable subordinator density at t = s = 1
    return 1.0 / (2.0 * math.sqrt(math.pi)) * math.exp(-0.25)


def _H_log_brownian_100(qtol_scale: float = 1.0) -> float:
    # high-order central differences of lam/log(1+lam) - 1 at lam = 100
    def phi(lam):
        return lam / math.log1p(lam) - 1.0

    h = 1e-4 * 100.0
    best = None
    for k in range(6):
        hk = h / 2.0**k
        d = (phi(100.0 + hk) - phi(100.0 - hk)) / (2.0 * hk)
        row = [d]
        if best is not None:
            for m in range(1, len(best) + 1):
                fac = 4.0**m
                row.append((fac * row[m - 1] - best[m - 1]) / (fac - 1.0))
        best = row
    return phi(100.0) - 100.0 * best[-1]


def _phi_inv_log_stable_10(qtol_scale: float = 1.0) -> float:
    # bisection at 1e-12 for lam / log(1 + sqrt(lam)) = 10
    f = lambda lam: lam / math.log1p(math.sqrt(lam)) - 10.0
    return optimize.brentq(f, 1.0, 1000.0, xtol=1e-12, rtol=8.9e-16)


def _cauchy_q_t1_r0(qtol_scale: float = 1.0) -> float:
    return 1.0 / math.pi


def _levy_j_r2(qtol_scale: float = 1.0) -> float:
    return 1.0 / (4.0 * math.pi)


def _half_space_kernel(qtol_scale: float = 1.0) -> float:
    return math.pi**-0.5 * (1.0 - math.exp(-4.0))


def _phi_quadrature_sqrt(qtol_scale: float = 1.0) -> float:
    # Levy-measure integral of the 1/2-stable measure at lam = 4 with the
    # singularity substituted away, on a fixed composite rule whose density
    # scales inversely with qtol_scale (the sensitivity knob is honest: a
    # looser tolerance genuinely coarsens the rule)
    lam = 4.0
    c = 1.0 / (2.0 * math.sqrt(math.pi))
    U = 60.0
    n = max(8, int(6000 / qtol_scale**2))
    n += n % 2  # Simpson needs an even panel count
    u = np.linspace(0.0, U, n + 1)
    f = np.empty_like(u)
    f[0] = 2.0 * c * lam
    f[1:] = 2.0 * c * (-np.expm1(-lam * u[1:] ** 2)) / u[1:] ** 2
    h = U / n
    simpson = h / 3.0 * (f[0] + f[-1] + 4.0 * f[1:-1:2].sum()
                         + 2.0 * f[2:-1:2].sum())
    return simpson + 2.0 * c / U  # analytic tail of the integrand


def _interval_stable_cdf(qtol_scale: float = 1.0) -> float:
    # P(S_1 in [1.5, 3]) for the 1/2-stable subordinator by erfc arithmetic
    return math.erfc(1.0 / (2.0 * math.sqrt(2.0))) - math.erfc(
        1.0 / (2.0 * math.sqrt(0.5))
    )


def _newtonian_green(qtol_scale: float = 1.0) -> float:
    return 1.0 / (8.0 * math.pi)


def _asymptote_band(spec_id: str, field: str) -> Callable[[float], float]:
    def oracle(qtol_scale: float = 1.0) -> float:
        lams = np.concatenate([np.geomspace(1e-4, 1.0, 8),
                               np.geomspace(1e2, 1e8, 8)])
        rows = asymptote_table(builtin_exponent(spec_id), lams)
        vals = [row[field] for row in rows]
        return max(vals) / min(vals)

    return oracle


FIXTURE_ORACLES = {
    "subordinator.half_stable_density.t1_s1": (_half_stable_density_oracle, 1e-12),
    "bernstein.H_log_brownian.lam100": (_H_log_brownian_100, 1e-9),
    "bernstein.phi_inv_log_stable.y10": (_phi_inv_log_stable_10, 1e-11),
    "bernstein.phi_levy_quadrature.lam4": (_phi_quadrature_sqrt, 1e-7),
    "kernels.cauchy_q.t1_r0": (_cauchy_q_t1_r0, 1e-12),
    "kernels.levy_j.r2": (_levy_j_r2, 1e-12),
    "kernels.newtonian_green.r2": (_newtonian_green, 1e-12),
    "domains.half_space_kernel.t025_x1_y1": (_half_space_kernel, 1e-12),
    "subordinator.stable_cdf.t1_15_30": (_interval_stable_cdf, 1e-12),
    "envelopes.band_phi_inv.log_brownian": (
        _asymptote_band("log-brownian", "phi_inv_ratio"), 1e-6),
    "envelopes.band_H.log_brownian": (
        _asymptote_band("log-brownian", "H_ratio"), 1e-6),
    "envelopes.band_phi_inv.log_stable": (
        _asymptote_band("log-stable-1.0", "phi_inv_ratio"), 1e-6),
    "envelopes.band_H.log_stable": (
        _asymptote_band("log-stable-1.0", "H_ratio"), 1e-6),
}


def compute_all(qtol_scale: float = 1.0) -> dict:
    return {key: oracle(qtol_scale)
            for key, (oracle, _tol) in FIXTURE_ORACLES.items()}


def update_store(path, qtol_scale: float = 1.0) -> dict:
    values = compute_all(qtol_scale)
    payload = {key: {"value": values[key], "rtol": FIXTURE_ORACLES[key][1]}
               for key in sorted(values)}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return values


def check_store(path, qtol_scale: float = 1.0) -> list:
    """Recompute all oracles and return the drifted keys."""
    with open(path) as fh:
        stored = json.load(fh)
    offenders = []
    fresh = compute_all(qtol_scale)
    for key, entry in stored.items():
        if key not in fresh:
            offenders.append((key, "missing oracle"))
            continue
        want, got = entry["value"], fresh[key]
        rtol = entry.get("rtol", 1e-9)
        if not math.isfinite(got) or abs(got - want) > rtol * max(abs(want), 1e-300):
            offenders.append((key, f"stored {want!r} recomputed {got!r}"))
    for key in fresh:
        if key not in stored:
            offenders.append((key, "not in store"))
    return offenders
