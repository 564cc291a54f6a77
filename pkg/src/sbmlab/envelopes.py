"""Two-sided estimate envelopes for the whole-space and Dirichlet kernels.

Every envelope is an explicit elementary function of t, r (or x, y and the
boundary distance) built from phi, its inverse, and H.  Constants that the
comparison statements leave implicit are pluggable knobs; ``fit_constants``
measures the extremal density-to-envelope ratios over a grid and reports the
constants that make a claimed two-sided bound hold there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .bernstein import LaplaceExponent
from .errors import ArgumentError, CapabilityError, DomainError, SingularityError
from .kernels import DensityQuery, DensityTable, gaussian_kernel
from .reports import ComparabilityReport

__all__ = [
    "EnvelopeConstants",
    "SpectralEstimate",
    "asymptote_table",
    "check_regime_structure",
    "envelope_dirichlet",
    "envelope_dirichlet_large_time",
    "envelope_q",
    "envelope_whole_space",
    "fit_constants",
    "green_envelope_dirichlet",
    "green_envelope_free",
    "jump_dominance_constant",
    "regime_partition",
]


@dataclass(frozen=True)
class EnvelopeConstants:
    """Knobs of the estimate shapes.

    ``c_gauss``/``c_jump`` dilate the argument of the Gaussian and jump
    summands, ``a_upper``/``a_lower`` are the exponential rates of the
    phi-inverse branch, and ``c_outer`` is the overall multiplicative
    constant (multiplied in for the upper side, divided for the lower).
    """

    c_outer: float = 1.0
    c_gauss: float = 1.0
    c_jump: float = 1.0
    a_upper: float = 1.0
    a_lower: float = 1.0
    side: str = "upper"

    def __post_init__(self):
        if self.side not in ("upper", "lower"):
            raise ArgumentError("side must be 'upper' or 'lower'")
        if min(self.c_outer, self.c_gauss, self.c_jump,
               self.a_upper, self.a_lower) <= 0.0:
            raise ArgumentError("all constants must be positive")

    @property
    def rate(self) -> float:
        return self.a_upper if self.side == "upper" else self.a_lower

    def outer(self, value: float) -> float:
        return value * self.c_outer if self.side == "upper" else value / self.c_outer


@dataclass(frozen=True)
class SpectralEstimate:
    """Estimated leading Dirichlet eigenvalue with its uncertainty."""

    lambda1: float
    stderr: float
    method: str = "survival_slope"

    def __post_init__(self):
        if not self.lambda1 > 0.0:
            raise ArgumentError("lambda1 must be positive")


def _phi_inv(exp: LaplaceExponent, y: float) -> float:
    return exp.phi_inv(y)


def envelope_q(exp: LaplaceExponent, q: DensityQuery, rate: float = 1.0) -> float:
    """Estimate shape for the pure-jump density:
    phi_inv(1/t)^{d/2} ^ (t H(r^-2)/r^d + phi_inv(1/t)^{d/2} e^{-rate r^2 phi_inv(1/t)}).
    """
    d, t, r = q.d, q.t, q.r
    pinv = _phi_inv(exp, 1.0 / t)
    cap = pinv ** (d / 2.0)
    if r == 0.0:
        return cap
    jump = t * exp.H(r**-2.0) / r**d
    arg = rate * r * r * pinv
    expo = cap * math.exp(-arg) if arg < 745.0 else 0.0
    return min(cap, jump + expo)


def _interior_sum(exp: LaplaceExponent, d: int, t: float, r: float,
                  k: EnvelopeConstants,
                  q_value: Optional[float] = None) -> float:
    """p2(t, c_gauss r) + jump part (exact q value if supplied, else the
    estimate shape at the dilated radius)."""
    p2 = gaussian_kernel(DensityQuery(d, t, k.c_gauss * r))
    if q_value is not None:
        return p2 + q_value
    return p2 + envelope_q(exp, DensityQuery(d, t, k.c_jump * r), rate=k.rate)


def envelope_whole_space(exp: LaplaceExponent, q: DensityQuery,
                         k: EnvelopeConstants, global_form: bool = True,
                         q_value: Optional[float] = None) -> float:
    """Whole-space envelope: cap ^ (Gaussian + jump) with pluggable constants.

    The local form caps at t^{-d/2}; the global form also caps at
    phi_inv(1/t)^{d/2}.  The jump summand is the exact pure-jump density when
    the caller supplies ``q_value`` (evaluated at c_jump * r), otherwise the
    estimate shape.
    """
    d, t, r = q.d, q.t, q.r
    cap = t ** (-d / 2.0)
    if global_form:
        cap = min(cap, _phi_inv(exp, 1.0 / t) ** (d / 2.0))
    return k.outer(min(cap, _interior_sum(exp, d, t, r, k, q_value)))


def envelope_dirichlet(exp: LaplaceExponent, t: float, x, y, dom,
                       k: EnvelopeConstants) -> float:
    """Dirichlet envelope: boundary factors times the interior shape.

    At x = y the jump term is replaced by the t^{-d/2} cap (the min absorbs
    the singularity).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if not (dom.contains(x) and dom.contains(y)):
        raise DomainError("points must lie in the domain")
    d = dom.dim
    r = float(np.linalg.norm(x - y))
    b1 = min(1.0, dom.distance(x) / math.sqrt(t))
    b2 = min(1.0, dom.distance(y) / math.sqrt(t))
    cap = t ** (-d / 2.0)
    if r == 0.0:
        interior = cap
    else:
        p2 = gaussian_kernel(DensityQuery(d, t, k.c_gauss * r))
        pinv = _phi_inv(exp, 1.0 / t)
        jump = t * exp.H(r**-2.0) / r**d
        arg = k.rate * r * r * pinv
        expo = pinv ** (d / 2.0) * math.exp(-arg) if arg < 745.0 else 0.0
        interior = min(cap, p2 + jump + expo)
    return k.outer(b1 * b2 * interior)


def envelope_dirichlet_large_time(t: float, x, y, dom,
                                  est: SpectralEstimate) -> float:
    """Large-time factorization e^{-lambda1 t} delta(x) delta(y)."""
    if not dom.bounded:
        raise CapabilityError("large-time factorization needs a bounded domain")
    return math.exp(-est.lambda1 * t) * dom.distance(x) * dom.distance(y)


def green_envelope_free(exp: LaplaceExponent, d: int, r: float) -> float:
    """Free Green envelope r^{-d} (r^2 ^ phi(r^-2)^{-1}) for d >= 3."""
    if not r > 0.0:
        raise DomainError("radius must be positive")
    phi_val = exp.phi(r**-2.0)
    jump_clock = math.inf if phi_val == 0.0 else 1.0 / phi_val
    return r ** (-d) * min(r * r, jump_clock)


def green_envelope_dirichlet(d: int, x, y, dom) -> float:
    """Three-case Dirichlet Green shape g_D(x, y)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    r = float(np.linalg.norm(x - y))
    if r == 0.0:
        raise SingularityError("Green envelope diverges at x = y")
    dx, dy = dom.distance(x), dom.distance(y)
    if d >= 3:
        return r ** (2 - d) * min(1.0, dx * dy / (r * r))
    if d == 2:
        return math.log1p(dx * dy / (r * r))
    return min(math.sqrt(dx * dy), dx * dy / r)


# ---------------------------------------------------------------------------
# Log-corrected example asymptotics


def asymptote_table(exp: LaplaceExponent, lam_grid) -> list[dict]:
    """phi_inv and H next to their predicted asymptotic shapes.

    Supports the two log-corrected built-in families.  The grid must avoid
    the crossover point 2 by a factor of at least 2 on either side.
    """
    lam_grid = np.asarray(lam_grid, dtype=float)
    if np.any((lam_grid > 1.0) & (lam_grid < 4.0)):
        raise ArgumentError("grid must avoid the crossover point 2 by a factor 2")
    form = exp.spec.form
    if form == "log_stable":
        beta = exp.spec.beta
        inv_small = lambda y: y ** (2.0 / (2.0 - beta))
        H_small = lambda y: y ** (1.0 - beta / 2.0)
    elif form == "log_brownian":
        inv_small = lambda y: y
        H_small = lambda y: y * y
    else:
        raise CapabilityError("asymptote table covers the log-corrected families")
    rows = []
    for lam in lam_grid:
        lam = float(lam)
        small = lam < 2.0
        inv_shape = inv_small(lam) if small else lam * math.log(lam)
        H_shape = H_small(lam) if small else lam / math.log(lam) ** 2
        phi_inv = exp.phi_inv(lam)
        H = exp.H(lam)
        rows.append({
            "lam": lam,
            "branch": "small" if small else "large",
            "phi_inv": phi_inv,
            "phi_inv_shape": inv_shape,
            "phi_inv_ratio": phi_inv / inv_shape,
            "H": H,
            "H_shape": H_shape,
            "H_ratio": H / H_shape,
        })
    return rows


# ---------------------------------------------------------------------------
# Regime partition and constant fitting


REGIME_NAMES = ("cap_small_r", "cap_large_r", "gauss", "jump")


def regime_partition(exp: LaplaceExponent, ts, rs) -> dict:
    """Four-region masks: {t phi(r^-2) >= 1} crossed with {t >= r^2}."""
    ts = np.asarray(ts, dtype=float)[:, None]
    rs = np.asarray(rs, dtype=float)[None, :]
    with np.errstate(divide="ignore"):
        phi_r = np.where(rs > 0.0, exp.phi(np.maximum(rs, 1e-300) ** -2.0), np.inf)
    jump_clock = ts * phi_r >= 1.0
    diffusive = ts >= rs**2
    return {
        "cap_small_r": jump_clock & diffusive,
        "cap_large_r": jump_clock & ~diffusive,
        "gauss": ~jump_clock & diffusive,
        "jump": ~jump_clock & ~diffusive,
    }


def fit_constants(table: DensityTable, envelope: Callable[[DensityQuery], float],
                  regions: Optional[dict] = None) -> dict:
    """Per-region extremal ratios exact/envelope.

    ``regions`` maps names to boolean masks over the table grid; omitted, a
    single region covering every grid point is used.  Points where the
    envelope is nonpositive are excluded (singular set).
    """
    if regions is None:
        regions = {"all": np.ones((len(table.ts), len(table.rs)), dtype=bool)}
    env = np.empty_like(table.values)
    for i, t in enumerate(table.ts):
        for j, r in enumerate(table.rs):
            env[i, j] = envelope(DensityQuery(table.d, float(t), float(r)))
    out = {}
    for name, mask in regions.items():
        mask = np.asarray(mask, dtype=bool)
        ok = mask & (env > 0.0) & (table.values > 0.0)
        if not np.any(ok):
            out[name] = ComparabilityReport(
                region=name, inf_ratio=math.nan, sup_ratio=math.nan,
                witness_inf=(), witness_sup=(), n_points=0,
            )
            continue
        ratio = np.where(ok, table.values / np.where(env > 0.0, env, 1.0), math.nan)
        imin = np.unravel_index(np.nanargmin(np.where(ok, ratio, np.inf)), ratio.shape)
        imax = np.unravel_index(np.nanargmax(np.where(ok, ratio, -np.inf)), ratio.shape)
        out[name] = ComparabilityReport(
            region=name,
            inf_ratio=float(ratio[imin]),
            sup_ratio=float(ratio[imax]),
            witness_inf=(float(table.ts[imin[0]]), float(table.rs[imin[1]])),
            witness_sup=(float(table.ts[imax[0]]), float(table.rs[imax[1]])),
            n_points=int(np.sum(ok)),
        )
    return out


def _branch_label(exp: LaplaceExponent, d: int, t: float, r: float,
                  q_fn=None, margin: float = 4.0) -> str:
    """Which branch attains the global envelope with unit constants.

    The summand comparison only declares dominance beyond ``margin`` (the
    regions are comparability statements, so constant-factor ties carry no
    structure); tied cells come back as 'mixed'.  ``q_fn(d, t, r)`` may
    supply the exact pure-jump density in place of the estimate shape.
    """
    cap = min(t ** (-d / 2.0), _phi_inv(exp, 1.0 / t) ** (d / 2.0))
    p2 = gaussian_kernel(DensityQuery(d, t, r))
    if q_fn is not None:
        qv = q_fn(d, t, r)
    else:
        qv = envelope_q(exp, DensityQuery(d, t, r), rate=1.0)
    if cap <= p2 + qv:
        return "cap"
    if p2 > margin * qv:
        return "gauss"
    if qv > margin * p2:
        return "jump"
    return "mixed"


def _dilate(mask: np.ndarray, cells: int) -> np.ndarray:
    """Grow a boolean mask by Chebyshev distance ``cells`` (no wrap)."""
    out = mask.copy()
    for _ in range(cells):
        grown = out.copy()
        grown[1:, :] |= out[:-1, :]
        grown[:-1, :] |= out[1:, :]
        grown[:, 1:] |= out[:, :-1]
        grown[:, :-1] |= out[:, 1:]
        grown[1:, 1:] |= out[:-1, :-1]
        grown[:-1, :-1] |= out[1:, 1:]
        grown[1:, :-1] |= out[:-1, 1:]
        grown[:-1, 1:] |= out[1:, :-1]
        out = grown
    return out


def _curve_cells(indicator: np.ndarray) -> np.ndarray:
    """Cells adjacent to a sign change of the region indicator."""
    edge = np.zeros_like(indicator)
    edge[:-1, :] |= indicator[:-1, :] != indicator[1:, :]
    edge[1:, :] |= indicator[:-1, :] != indicator[1:, :]
    edge[:, :-1] |= indicator[:, :-1] != indicator[:, 1:]
    edge[:, 1:] |= indicator[:, :-1] != indicator[:, 1:]
    return edge


def check_regime_structure(exp: LaplaceExponent, d: int, ts, rs,
                           q_fn=None, deep_factor: float = 100.0) -> dict:
    """Compare the branch-attainment map against the two analytic curves.

    Checked structure, matching the four-region picture:

    * the outer min is attained by the cap exactly on {t phi(r^-2) >= 1}, up
      to one grid cell around that curve;
    * on the sum side, the Gaussian summand dominates everywhere in the
      diffusive wedge {t >= r^2} (one-cell buffer) and the jump summand
      dominates on the deep wedge {t <= r^2/deep_factor}; between the two
      the handover drifts below the diagonal by a logarithmic factor, which
      is why the jump side carries a wide documented margin instead of one
      cell;
    * all four regions are populated.

    ``q_fn(d, t, r)`` supplies the exact pure-jump density for the map;
    defaulting to the estimate shape is fine for the cap switch but blurs
    the Gaussian/jump handover by its loose constants.
    """
    ts = np.asarray(ts, dtype=float)
    rs = np.asarray(rs, dtype=float)
    margin = 4.0
    shape = (len(ts), len(rs))
    labels = np.empty(shape, dtype=object)
    cap_arr = np.empty(shape)
    sum_arr = np.empty(shape)
    for i, t in enumerate(ts):
        pinv = _phi_inv(exp, 1.0 / float(t))
        for j, r in enumerate(rs):
            t_, r_ = float(t), float(r)
            labels[i, j] = _branch_label(exp, d, t_, r_, q_fn=q_fn,
                                         margin=margin)
            cap_arr[i, j] = min(t_ ** (-d / 2.0), pinv ** (d / 2.0))
            p2 = gaussian_kernel(DensityQuery(d, t_, r_))
            qv = (q_fn(d, t_, r_) if q_fn is not None
                  else envelope_q(exp, DensityQuery(d, t_, r_), rate=1.0))
            sum_arr[i, j] = p2 + qv
    regions = regime_partition(exp, ts, rs)
    jump_clock = regions["cap_small_r"] | regions["cap_large_r"]
    diffusive = regions["cap_small_r"] | regions["gauss"]

    # a region/label disagreement only counts when the min was decisive: the
    # regions are comparability statements, so factor-level ties carry no
    # structural information
    decisive = np.maximum(cap_arr, sum_arr) > margin * np.minimum(cap_arr, sum_arr)
    cap_lab = labels == "cap"
    near_clock = _dilate(_curve_cells(jump_clock), 1)
    cap_stray = (cap_lab != jump_clock) & ~near_clock & decisive
    # the estimate shape is loose by dimension-dependent constants; candidate
    # strays are re-judged against the exact pure-jump density
    if np.any(cap_stray):
        from .kernels import free_density_fourier

        for i, j in zip(*np.nonzero(cap_stray)):
            t_, r_ = float(ts[i]), float(rs[j])
            q_ex = free_density_fourier(exp, DensityQuery(d, t_, r_), "q")
            p2 = gaussian_kernel(DensityQuery(d, t_, r_))
            sum_ex = p2 + q_ex
            tie = max(cap_arr[i, j], sum_ex) <= margin * min(cap_arr[i, j], sum_ex)
            agrees = (cap_arr[i, j] <= sum_ex) == bool(jump_clock[i, j])
            if tie or agrees:
                cap_stray[i, j] = False

    sum_cells = ~cap_lab
    near_diag = _dilate(_curve_cells(diffusive), 1)
    gauss_stray = sum_cells & diffusive & ~near_diag & (labels == "jump")
    deep = (ts[:, None] * deep_factor <= rs[None, :] ** 2) & ~jump_clock
    jump_stray = sum_cells & deep & (labels != "jump")

    stray = cap_stray | gauss_stray | jump_stray
    # the cap region and the deep jump wedge must actually appear; strict
    # Gaussian dominance may be tie-level for heavy-jump specs, so its
    # region is policed through gauss_stray only
    populated = bool(np.any(labels == "cap") and np.any(labels == "jump"))
    return {
        "labels": labels,
        "stray_count": int(np.sum(stray)),
        "stray_cells": [
            (float(ts[i]), float(rs[j])) for i, j in zip(*np.nonzero(stray))
        ],
        "populated": populated,
        "ok": bool(populated and not np.any(stray)),
    }


def jump_dominance_constant(exp: LaplaceExponent, d: int,
                            c1: float = 1.0, c2: float = 1.0,
                            R: float = 1.0, T: float = 1.0,
                            n: int = 24) -> float:
    """Measured constant c3 in the far-field dominance
    t^{-d/2} e^{-r^2/(c1 t)} + phi_inv(1/t)^{d/2} e^{-c2 r^2 phi_inv(1/t)}
    <= c3 * t r^{-d} H(r^-2) over r >= R, t <= T."""
    ts = np.geomspace(T * 1e-4, T, n)
    rs = np.geomspace(R, 50.0 * R, n)
    worst = 0.0
    for t in ts:
        pinv = _phi_inv(exp, 1.0 / t)
        for r in rs:
            a1 = r * r / (c1 * t)
            lhs = t ** (-d / 2.0) * math.exp(-a1) if a1 < 745.0 else 0.0
            a2 = c2 * r * r * pinv
            lhs += pinv ** (d / 2.0) * math.exp(-a2) if a2 < 745.0 else 0.0
            rhs = t * r ** (-d) * exp.H(r**-2.0)
            worst = max(worst, lhs / rhs)
    return worst
