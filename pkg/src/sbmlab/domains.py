"""Model domains with exact killed-Brownian-motion kernels.

The catalogue covers intervals, finite unions of intervals, half-spaces,
balls, and exterior balls; these are the geometries with closed-form or
eigenseries Dirichlet heat kernels (generator Delta, so the interval (0, L)
has eigenvalues k^2 pi^2 / L^2).  The subordinate-killed kernel

    q_D(t, x, y) = E[ p_D^BM(t + T_t, x, y) ]

is the quadrature of the killed kernel against the subordinator law and
lower-bounds the Dirichlet kernel of the subordinate process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize, special

from .bernstein import LaplaceExponent
from .errors import ArgumentError, CapabilityError, DomainError
from .subordinator import extrapolate_table_tail, law_for

__all__ = [
    "DomainSpec",
    "killed_bm_kernel",
    "killed_bm_mass",
    "subordinate_killed_kernel",
]

_KINDS = ("interval", "union_of_intervals", "half_space", "ball", "exterior_ball")


@dataclass(frozen=True)
class DomainSpec:
    """A model C^1,1 domain with its characteristics.

    ``R0``/``Lambda0`` are the localization radius and boundary seminorm
    (zero for flat and spherical models), ``r0`` the uniform interior ball
    radius, and ``lambda0`` the path-distance comparability constant.
    """

    kind: str
    params: tuple
    R0: float
    Lambda0: float
    r0: float
    lambda0: float
    bounded: bool
    dim: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ArgumentError(f"unknown domain kind {self.kind!r}")
        if not 0.0 < self.r0 <= self.R0:
            raise ArgumentError("need 0 < r0 <= R0")

    # -- constructors --------------------------------------------------------

    @staticmethod
    def interval(a: float, b: float, R0: Optional[float] = None) -> "DomainSpec":
        if not a < b:
            raise ArgumentError("need a < b")
        L = b - a
        R0 = L if R0 is None else R0
        return DomainSpec("interval", (a, b), R0=R0, Lambda0=0.0,
                          r0=min(L / 2.0, R0), lambda0=1.0, bounded=True, dim=1)

    @staticmethod
    def union_of_intervals(pieces, R0: Optional[float] = None) -> "DomainSpec":
        pieces = tuple(sorted((float(a), float(b)) for a, b in pieces))
        if not pieces:
            raise ArgumentError("need at least one interval")
        lengths = [b - a for a, b in pieces]
        gaps = [pieces[i + 1][0] - pieces[i][1] for i in range(len(pieces) - 1)]
        if any(l <= 0.0 for l in lengths) or any(g <= 0.0 for g in gaps):
            raise ArgumentError("intervals must be disjoint and nondegenerate")
        cap = min(lengths + gaps) if gaps else min(lengths)
        R0 = cap if R0 is None else R0
        if min(lengths) < R0 or (gaps and min(gaps) < R0):
            raise ArgumentError("interval lengths and gaps must be at least R0")
        return DomainSpec("union_of_intervals", pieces, R0=R0, Lambda0=0.0,
                          r0=min(min(lengths) / 2.0, R0), lambda0=1.0,
                          bounded=True, dim=1)

    @staticmethod
    def half_space(d: int, R0: float = 1.0) -> "DomainSpec":
        return DomainSpec("half_space", (d,), R0=R0, Lambda0=0.0, r0=R0,
                          lambda0=1.0, bounded=False, dim=d)

    @staticmethod
    def ball(d: int, R: float, R0: Optional[float] = None) -> "DomainSpec":
        R0 = R if R0 is None else R0
        return DomainSpec("ball", (d, R), R0=R0, Lambda0=0.0,
                          r0=min(R, R0), lambda0=1.0, bounded=True, dim=d)

    @staticmethod
    def exterior_ball(d: int, R: float, R0: Optional[float] = None) -> "DomainSpec":
        R0 = R if R0 is None else R0
        return DomainSpec("exterior_ball", (d, R), R0=R0, Lambda0=0.0,
                          r0=min(R, R0), lambda0=2.0, bounded=False, dim=d)

    # -- geometry --------------------------------------------------------------

    def _as_point(self, x) -> np.ndarray:
        pt = np.atleast_1d(np.asarray(x, dtype=float))
        if pt.shape != (self.dim,):
            raise ArgumentError(f"point must have dimension {self.dim}")
        return pt

    def contains(self, x) -> bool:
        """Strict interior membership."""
        pt = self._as_point(x)
        if self.kind == "interval":
            a, b = self.params
            return a < pt[0] < b
        if self.kind == "union_of_intervals":
            return any(a < pt[0] < b for a, b in self.params)
        if self.kind == "half_space":
            return pt[-1] > 0.0
        if self.kind == "ball":
            return float(np.linalg.norm(pt)) < self.params[1]
        return float(np.linalg.norm(pt)) > self.params[1]

    def distance(self, x) -> float:
        """Euclidean distance to the boundary; exact for the model kinds.

        Points must lie in the closure of the domain.
        """
        pt = self._as_point(x)
        if self.kind == "interval":
            a, b = self.params
            if not a <= pt[0] <= b:
                raise DomainError("point outside the closure")
            return min(pt[0] - a, b - pt[0])
        if self.kind == "union_of_intervals":
            for a, b in self.params:
                if a <= pt[0] <= b:
                    return min(pt[0] - a, b - pt[0])
            raise DomainError("point outside the closure")
        if self.kind == "half_space":
            if pt[-1] < 0.0:
                raise DomainError("point outside the closure")
            return float(pt[-1])
        rad = float(np.linalg.norm(pt))
        R = self.params[1]
        if self.kind == "ball":
            if rad > R:
                raise DomainError("point outside the closure")
            return R - rad
        if rad < R:
            raise DomainError("point outside the closure")
        return rad - R

    def component_index(self, x) -> int:
        """Index of the connected component containing x."""
        pt = self._as_point(x)
        if self.kind == "union_of_intervals":
            for i, (a, b) in enumerate(self.params):
                if a < pt[0] < b:
                    return i
            raise DomainError("point outside the domain")
        if not self.contains(pt):
            raise DomainError("point outside the domain")
        return 0

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "params": list(np.asarray(self.params, dtype=float).ravel())
            if self.kind != "union_of_intervals"
            else [list(p) for p in self.params],
            "R0": self.R0,
            "Lambda0": self.Lambda0,
            "r0": self.r0,
            "lambda0": self.lambda0,
        }

    @staticmethod
    def from_json(obj: dict) -> "DomainSpec":
        kind = obj["kind"]
        params = obj["params"]
        if kind == "interval":
            return DomainSpec.interval(params[0], params[1], R0=obj.get("R0"))
        if kind == "union_of_intervals":
            return DomainSpec.union_of_intervals(params, R0=obj.get("R0"))
        if kind == "half_space":
            return DomainSpec.half_space(int(params[0]), R0=obj.get("R0", 1.0))
        if kind == "ball":
            return DomainSpec.ball(int(params[0]), params[1], R0=obj.get("R0"))
        if kind == "exterior_ball":
            return DomainSpec.exterior_ball(int(params[0]), params[1],
                                            R0=obj.get("R0"))
        raise ArgumentError(f"unknown domain kind {kind!r}")


# ---------------------------------------------------------------------------
# Killed Brownian kernels (generator Delta)


def _gauss1(t: float, dx: float) -> float:
    a = dx * dx / (4.0 * t)
    if a > 745.0:
        return 0.0
    return math.exp(-a) / math.sqrt(4.0 * math.pi * t)


def _interval_kernel(L: float, t: float, x: float, y: float) -> float:
    """Dirichlet kernel on (0, L); spectral series for moderate-to-large t,
    method of images for small t."""
    if t < 1e-3 * L * L:
        # image sum: only a handful of terms contribute
        K = int(math.ceil(math.sqrt(745.0 * 4.0 * t) / (2.0 * L))) + 2
        total = 0.0
        for k in range(-K, K + 1):
            total += _gauss1(t, x - y + 2.0 * k * L)
            total -= _gauss1(t, x + y + 2.0 * k * L)
        return max(total, 0.0)
    total = 0.0
    K = 1
    while 2.0 * math.exp(-(K * K) * math.pi**2 * t / (L * L)) * K >= 1e-12:
        K += 1
        if K > 100000:
            break
    for k in range(1, K + 1):
        lam = (k * math.pi / L) ** 2
        total += math.exp(-lam * t) * math.sin(k * math.pi * x / L) * math.sin(
            k * math.pi * y / L
        )
    return max(2.0 / L * total, 0.0)


def _bessel_zeros(nu: float, n: int) -> np.ndarray:
    """First n positive zeros of J_nu for real nu >= 0."""
    if abs(nu - round(nu)) < 1e-12:
        return special.jn_zeros(int(round(nu)), n)
    zeros = []
    # first zero exceeds nu; scan in pi/8 steps and polish by bracketing
    s = max(nu + 1.85 * max(nu, 1.0) ** (1.0 / 3.0), 1.0)
    f_prev = special.jv(nu, s)
    step = math.pi / 8.0
    while len(zeros) < n:
        s2 = s + step
        f_next = special.jv(nu, s2)
        if f_prev == 0.0:
            zeros.append(s)
        elif f_prev * f_next < 0.0:
            zeros.append(optimize.brentq(lambda z: special.jv(nu, z), s, s2,
                                         xtol=1e-14, rtol=8.9e-16))
        s, f_prev = s2, f_next
        if s > (n + nu + 10.0) * math.pi * 2.0:
            raise ArgumentError("Bessel zero scan exhausted")
    return np.array(zeros[:n])


_ZERO_CACHE: dict = {}


def _cached_zeros(nu: float, n: int) -> np.ndarray:
    key = round(nu * 2.0)
    got = _ZERO_CACHE.get(key)
    if got is None or len(got) < n:
        got = _bessel_zeros(nu, max(n, 64))
        _ZERO_CACHE[key] = got
    return got[:n]


def _radial_part(nu: float, d: int, j: float, R: float, r: float) -> float:
    """Normalized radial eigenfunction r^{1-d/2} J_nu(j r / R) (unit L2)."""
    norm = math.sqrt(2.0) / (R * abs(special.jv(nu + 1.0, j)))
    if r < 1e-12 * R:
        # only finite at the origin when nu = d/2 - 1 (angular order zero)
        return norm * (j / (2.0 * R)) ** nu / math.gamma(nu + 1.0) * (
            r ** (1.0 - d / 2.0 + nu)
        ) if abs(1.0 - d / 2.0 + nu) > 1e-12 else norm * (
            (j / (2.0 * R)) ** nu / math.gamma(nu + 1.0)
        )
    return norm * r ** (1.0 - d / 2.0) * special.jv(nu, j * r / R)


def _angular_weight(d: int, ell: int, cos_theta: float) -> float:
    """Sum over the order-ell spherical harmonics at angle theta."""
    area = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
    if d == 2:
        if ell == 0:
            return 1.0 / (2.0 * math.pi)
        return math.cos(ell * math.acos(min(max(cos_theta, -1.0), 1.0))) / math.pi
    lam = d / 2.0 - 1.0
    geg = special.eval_gegenbauer(ell, lam, min(max(cos_theta, -1.0), 1.0))
    return (2.0 * ell + d - 2.0) / ((d - 2.0) * area) * geg


def _ball_kernel(d: int, R: float, t: float, x: np.ndarray,
                 y: np.ndarray) -> float:
    """Eigenseries kernel of the ball B(0, R) in dimension d >= 2."""
    rx, ry = float(np.linalg.norm(x)), float(np.linalg.norm(y))
    if rx > 0.0 and ry > 0.0:
        cos_theta = float(np.dot(x, y) / (rx * ry))
    else:
        cos_theta = 1.0
    total = 0.0
    for ell in range(0, 200):
        nu = ell + d / 2.0 - 1.0
        if (ell > 0 and (rx < 1e-12 * R or ry < 1e-12 * R)):
            continue  # higher angular modes vanish at the origin
        zeros = _cached_zeros(nu, 64)
        ang = _angular_weight(d, ell, cos_theta)
        head = math.exp(-((zeros[0] / R) ** 2) * t)
        # Gegenbauer values are bounded by their value at 1
        ang_cap = abs(_angular_weight(d, ell, 1.0))
        if head * ang_cap * 4.0 / (R**d) < 1e-15 * max(abs(total), 1e-8):
            break
        part = 0.0
        for k, j in enumerate(zeros):
            w = math.exp(-((j / R) ** 2) * t)
            if w < 1e-17:
                break
            part += w * _radial_part(nu, d, float(j), R, rx) * _radial_part(
                nu, d, float(j), R, ry
            )
            if k == len(zeros) - 1:
                zeros = _cached_zeros(nu, 2 * len(zeros))
        total += part * ang
    return max(total, 0.0)


def killed_bm_kernel(dom: DomainSpec, t: float, x, y) -> float:
    """Transition density of Brownian motion (generator Delta) killed on
    leaving the domain; exact series/reflection formulas per model kind."""
    if not t > 0.0:
        raise ArgumentError("time must be positive")
    px, py = dom._as_point(x), dom._as_point(y)
    if not (dom.contains(px) and dom.contains(py)):
        raise DomainError("points must lie in the open domain")
    kind = dom.kind
    if kind == "interval":
        a, b = dom.params
        return _interval_kernel(b - a, t, px[0] - a, py[0] - a)
    if kind == "union_of_intervals":
        ci, cj = dom.component_index(px), dom.component_index(py)
        if ci != cj:
            return 0.0  # Brownian motion never crosses a gap
        a, b = dom.params[ci]
        return _interval_kernel(b - a, t, px[0] - a, py[0] - a)
    if kind == "half_space":
        d = dom.dim
        diff = px - py
        refl = py.copy()
        refl[-1] = -refl[-1]
        diffr = px - refl
        g = (4.0 * math.pi * t) ** (-d / 2.0)
        a1 = float(diff @ diff) / (4.0 * t)
        a2 = float(diffr @ diffr) / (4.0 * t)
        v1 = g * math.exp(-a1) if a1 < 745.0 else 0.0
        v2 = g * math.exp(-a2) if a2 < 745.0 else 0.0
        return max(v1 - v2, 0.0)
    if kind == "ball":
        d, R = dom.params
        if d == 1:
            return _interval_kernel(2.0 * R, t, px[0] + R, py[0] + R)
        return _ball_kernel(int(d), R, t, px, py)
    raise CapabilityError(f"no exact killed kernel for kind {kind!r}")


def killed_bm_mass(dom: DomainSpec, t: float, x) -> float:
    """Survival probability of killed Brownian motion from x (interval and
    half-space kinds)."""
    px = dom._as_point(x)
    if dom.kind == "half_space":
        return math.erf(float(px[-1]) / math.sqrt(4.0 * t))
    if dom.kind in ("interval", "union_of_intervals"):
        if dom.kind == "interval":
            a, b = dom.params
        else:
            a, b = dom.params[dom.component_index(px)]
        L = b - a
        z = px[0] - a
        # image-sum form of the survival probability
        K = int(math.ceil(math.sqrt(745.0 * 4.0 * t) / (2.0 * L))) + 2
        total = 0.0
        for k in range(-K, K + 1):
            total += math.erf((z + 2 * k * L) / math.sqrt(4 * t)) - math.erf(
                (z - L + 2 * k * L) / math.sqrt(4 * t)
            )
            total -= math.erf((-z + 2 * k * L) / math.sqrt(4 * t)) - math.erf(
                (-z - L + 2 * k * L) / math.sqrt(4 * t)
            )
        return min(max(0.5 * total, 0.0), 1.0)
    raise CapabilityError(f"no closed survival for kind {dom.kind!r}")


def subordinate_killed_kernel(dom: DomainSpec, exp: LaplaceExponent,
                              t: float, x, y) -> float:
    """q_D(t, x, y) = E[p_D^BM(t + T_t, x, y)]: kill first, subordinate
    second.  Quadrature against the subordinator law with the certified
    (4 pi s)^{-d/2} tail cap."""
    law = law_for(exp, t)
    tab = law.quadrature_table()
    px, py = dom._as_point(x), dom._as_point(y)
    if not (dom.contains(px) and dom.contains(py)):
        raise DomainError("points must lie in the open domain")
    vals = np.array([
        killed_bm_kernel(dom, t + float(u), px, py) for u in tab["nodes"]
    ])
    contribs = tab["weights"] * tab["density"] * vals
    total = float(np.sum(contribs))
    # tail beyond the table: geometric continuation of the panel sums,
    # falling back to (kernel at the edge) * (tail mass)
    U = float(tab["nodes"][-1])
    fallback = killed_bm_kernel(dom, t + U, px, py) * tab["tail_prob"]
    panel = contribs.reshape(-1, tab["nodes_per_panel"]).sum(axis=1)
    total += extrapolate_table_tail(panel, fallback)
    return total
