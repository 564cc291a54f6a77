"""Acceptance suite: every criterion exercised at its stated tolerance.

Each test prints one `[CRITERION k] PASS/FAIL` line; Monte Carlo backed
criteria share the session-scoped runs below (about 10^6 paths total for
the main interval experiment).
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from sbmlab.bernstein import builtin_exponent, certify_scaling, scaling_constant_at
from sbmlab.domains import DomainSpec, subordinate_killed_kernel
from sbmlab.envelopes import envelope_q
from sbmlab.experiments import (
    asymptotics_check,
    dirichlet_green_check,
    dirichlet_lower_route_check,
    dirichlet_mc_check,
    disconnected_check,
    dual_route_check,
    free_green_check,
    free_green_log_shape_check,
    jump_density_check,
    lambda1_check,
    run_dirichlet_mc,
    whole_space_check,
)
from sbmlab.kernels import (
    DensityQuery,
    chapman_kolmogorov_residual,
    free_density_fourier,
)
from sbmlab.montecarlo import (
    PathConfig,
    estimate_killed_kernel,
    simulate_paths,
)
from sbmlab.subordinator import law_for

STABLE = builtin_exponent("stable-0.5")
ALL_SPECS = ("stable-0.5", "log-stable-1.0", "log-brownian")
FIXTURE_STORE = Path(__file__).resolve().parent.parent / "fixtures.json"


def _report(k: int, ok: bool, detail: str):
    print(f"\n[CRITERION {k:02d}] {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {k}: {detail}"


# --- shared Monte Carlo runs --------------------------------------------------

@pytest.fixture(scope="session")
def main_run():
    t0 = time.time()
    rec = run_dirichlet_mc("stable-0.5", n_paths=10**6, seed=2024)
    rec.meta["wall_seconds"] = time.time() - t0
    return rec


@pytest.fixture(scope="session")
def bm_big():
    cfg = PathConfig(d=1, dt=1e-4, horizon=0.5, n_paths=10**6, seed=555,
                     jump_scale=0.0, checkpoints=(0.1, 0.25))
    return simulate_paths(cfg, DomainSpec.interval(0.0, 1.0), [0.5])


@pytest.fixture(scope="session")
def second_seed_run():
    return run_dirichlet_mc("stable-0.5", n_paths=250_000, seed=31337)


@pytest.fixture(scope="session")
def x03_run():
    return run_dirichlet_mc("stable-0.5", n_paths=300_000, seed=808,
                            start=0.3)


@pytest.fixture(scope="session")
def survival_runs(main_run):
    runs = {0.5: main_run}
    t0 = time.time()
    for i, x in enumerate((0.02, 0.05, 0.1)):
        cfg = PathConfig(alpha=0.5, d=1, dt=1e-4, horizon=0.3,
                         n_paths=200_000, seed=4000 + i, jump_scale=1.0,
                         checkpoints=(0.05, 0.1, 0.25))
        runs[x] = simulate_paths(cfg, DomainSpec.interval(0.0, 1.0), [x])
    runs[0.5].meta["survival_wall_seconds"] = time.time() - t0
    return runs


# --- criteria -------------------------------------------------------------------

def test_criterion_01_dual_route_equivalence():
    t0 = time.time()
    out = dual_route_check("stable-0.5", d=1, n=5)
    wall = time.time() - t0
    ok = out["ok"] and wall < 60.0
    _report(1, ok, f"max rel gap {out['max_rel_gap']:.2e} (tol 1e-5), "
                   f"runtime {wall:.0f}s (< 60s)")


def test_criterion_02_cauchy_oracle():
    worst = 0.0
    for t in np.linspace(0.05, 2.0, 5):
        for r in np.linspace(0.0, 5.0, 5):
            got = free_density_fourier(STABLE, DensityQuery(1, float(t), float(r)), "q")
            want = (1.0 / math.pi) * t / (t * t + r * r)
            worst = max(worst, abs(got - want) / want)
    _report(2, worst < 1e-6, f"max rel error vs Cauchy density {worst:.2e} "
                             f"(tol 1e-6)")


def test_criterion_03_whole_space_global():
    details = []
    ok = True
    for spec_id in ALL_SPECS:
        for d in (1, 3):
            out = whole_space_check(spec_id, d, global_form=True)
            details.append(f"{spec_id}/d={d}: spread {out['spread']:.1f} "
                           f"regime {'ok' if out['regime_ok'] else 'BAD'}")
            ok = ok and out["ok"]
    _report(3, ok, "; ".join(details) + " (cap 100)")


def test_criterion_04_jump_envelope():
    details = []
    ok = True
    for spec_id in ALL_SPECS:
        for d in (1, 3):
            out = jump_density_check(spec_id, d)
            details.append(f"{spec_id}/d={d}: spread {out['spread']:.1f} "
                           f"gauss-cap {'ok' if out['gauss_bound_ok'] else 'BAD'}")
            ok = ok and out["ok"]
    _report(4, ok, "; ".join(details) + " (cap 100)")


def test_criterion_05_asymptote_bands():
    with open(FIXTURE_STORE) as fh:
        store = json.load(fh)
    ok = True
    details = []
    for spec_id, tag in (("log-stable-1.0", "log_stable"),
                         ("log-brownian", "log_brownian")):
        out = asymptotics_check(spec_id)
        for field in ("phi_inv_ratio", "H_ratio"):
            frozen = store[f"envelopes.band_{field.split('_ratio')[0].replace('phi_inv', 'phi_inv')}.{tag}"]
            spread = out[field + "_spread"]
            drift = abs(spread - frozen["value"]) / frozen["value"]
            ok = ok and out["ok"] and drift < 1e-4
            details.append(f"{spec_id}.{field}: spread {spread:.3f} "
                           f"(frozen {frozen['value']:.3f})")
    _report(5, ok, "; ".join(details))


def test_criterion_06_free_green():
    out = free_green_check("stable-0.5", d=3)
    shape = free_green_log_shape_check()
    ok = out["ok"] and shape["ok"]
    _report(6, ok, f"stable band {out['band'][0]:.3f}..{out['band'][1]:.3f} "
                   f"spread {out['spread']:.2f} (cap 20); log-corrected "
                   f"branch spread {shape['spread']:.2f}")


def test_criterion_07_lower_route():
    out = dirichlet_lower_route_check("stable-0.5", n_xy=6)
    _report(7, out["ok"], f"measured c in [{out['c_lower']:.3g}, "
                          f"{out['c_upper']:.3g}], positive and finite")


def test_criterion_08_dirichlet_mc(main_run, survival_runs):
    out = dirichlet_mc_check(main_run, "stable-0.5",
                             survival_runs=survival_runs)
    wall = main_run.meta.get("wall_seconds", 0.0) + main_run.meta.get(
        "survival_wall_seconds", 0.0)
    ok = out["ok"] and wall <= 900.0
    band = out.get("survival_factor_band", (0, 0))
    _report(8, ok, f"envelope constants [{out['lower_constant']:.3g}, "
                   f"{out['upper_constant']:.3g}] spread {out['spread']:.1f} "
                   f"(cap 100, 3-sigma); survival/boundary-factor band "
                   f"[{band[0]:.2f}, {band[1]:.2f}]; MC wall {wall:.0f}s "
                   f"(<= 900s)")


def test_criterion_09_spectral(main_run, bm_big, second_seed_run):
    out = lambda1_check(main_run, bm_big, second_seed_run,
                        factor_times=(2.0, 3.0))
    _report(9, out["ok"],
            f"BM lambda1 {out['bm_lambda1']:.3f} vs pi^2 {math.pi**2:.3f} "
            f"(5%); stable lambda1 {out['lambda1']:.3f}+-{out['stderr']:.3f} "
            f"seed gap {out.get('seed_gap_sigmas', 0.0):.2f} sigma (3); "
            f"factorization spread {out['factor_spread']:.2f} (cap 10) at "
            f"t in {{2, 3}} via the spectral-regime anchor")


def test_criterion_10_dirichlet_green(main_run, x03_run):
    out = dirichlet_green_check(main_run, x03_run)
    _report(10, out["ok"],
            f"G_D/g_D over {len(out['ratios'])} pairs in "
            f"[{out['band'][0]:.3f}, {out['band'][1]:.3f}], spread "
            f"{out['spread']:.2f} (cap 20)")


def test_criterion_11_disconnected():
    out = disconnected_check("stable-0.5", n_paths=300_000)
    _report(11, out["ok"],
            f"cross-component density positive at 3 sigma: {out['positive']}; "
            f"jump-envelope band [{out['band'][0]:.2f}, {out['band'][1]:.2f}]")


def test_criterion_12_invariant_suites(main_run):
    t0 = time.time()
    checks = {}
    # bernstein scaling inequalities on a random grid
    rng = np.random.default_rng(8)
    lam = rng.uniform(1e-4, 1e6, 200)
    x = rng.uniform(1.0, 1e4, 200)
    ok_b = True
    for exp in map(builtin_exponent, ALL_SPECS):
        ok_b &= bool(np.all(exp.phi(lam * x) <= x * exp.phi(lam) * (1 + 1e-11)))
        ok_b &= bool(np.all(exp.H(lam * x) <= x**2 * exp.H(lam) * (1 + 1e-11)))
    checks["scaling-lemmas"] = ok_b
    # scaling transfer from H to phi (grid constants within modest slack)
    wH = certify_scaling(lambda v: STABLE.H(v), a=0.0)
    wphi = certify_scaling(lambda v: STABLE.phi(v), a=0.0)
    checks["H-to-phi-transfer"] = bool(
        wH.lower_certified and wphi.gamma >= wH.gamma
        and scaling_constant_at(wphi, min(wH.delta, 1.0), "upper") <= 2.0
    )
    # Chapman-Kolmogorov at the stated point
    checks["chapman-kolmogorov"] = bool(
        chapman_kolmogorov_residual(STABLE, 0.3, 0.7, 1.0) < 1e-4
    )
    # subordinator Laplace-transform consistency
    law = law_for(STABLE, 0.5)
    tab = law.quadrature_table()
    lt_ok = True
    for lamv in (0.5, 1.0, 2.0, 5.0):
        emp = float(np.sum(tab["weights"] * tab["density"]
                           * np.exp(-lamv * tab["nodes"])))
        lt_ok &= abs(emp - math.exp(-0.5 * STABLE.phi(lamv))) < 1e-6
    checks["laplace-consistency"] = lt_ok
    # domains: q_D symmetry and the domination chain q_D <= p_D_hat + 3 sigma
    dom = DomainSpec.interval(0.0, 1.0)
    t = 0.1
    sym = abs(
        subordinate_killed_kernel(dom, STABLE, t, [0.3], [0.6])
        - subordinate_killed_kernel(dom, STABLE, t, [0.6], [0.3])
    )
    checks["qD-symmetry"] = bool(sym < 1e-8)
    dom_ok = True
    for y in (0.3, 0.5, 0.7):
        qd = subordinate_killed_kernel(dom, STABLE, t, [0.5], [y])
        v, se, _ = estimate_killed_kernel(main_run, t, [y])
        free = free_density_fourier(STABLE, DensityQuery(1, t, abs(0.5 - y)), "p")
        dom_ok &= qd <= v + 3.0 * se + 0.02 * v  # KDE smoothing slack
        dom_ok &= v - 3.0 * se <= free * (1.0 + 0.02)
    checks["domination-chain"] = bool(dom_ok)
    wall = time.time() - t0
    ok = all(checks.values())
    _report(12, ok, "; ".join(f"{k}={'ok' if v else 'BAD'}"
                              for k, v in checks.items())
            + f"; invariants wall {wall:.0f}s")
