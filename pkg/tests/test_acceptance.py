"""Acceptance criteria 1-8, one test each.

Every test records a one-line verdict in ``RESULTS``; the lines are printed
at the end of the pytest run and when this file is executed directly.
"""

import subprocess
import sys
import time

import numpy as np
import pytest

from monge_legendre import geometry, harness, jets, residuals, spectral
from monge_legendre.spectral import SpectralSolution
from oracles import ANALYTIC_FUNCTIONS, JET_NS, MP_NS, multi_indices, richardson_partial

RESULTS = {}


def record(n, ok, detail, t0):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}  ({time.perf_counter() - t0:.1f} s)"
    RESULTS[n] = line
    print(line)
    return ok


def sweep(values):
    return harness.run_sweep(harness.build_config({k: str(v) for k, v in values.items()}))


def random_params(n, seed=2026):
    """``n`` draws of A, B, C, D, alpha, beta in [-2, 2] with alpha != beta."""
    rng = np.random.Generator(np.random.Philox(seed))
    out = []
    while len(out) < n:
        A, B, C, D, a, b = (float(v) for v in rng.uniform(-2, 2, 6))
        if abs(a - b) > 0.1:
            out.append(dict(A=repr(A), B=repr(B), C=repr(C), D=repr(D), alpha=repr(a), beta=repr(b)))
    return out


def by_branch(records, check):
    return {r["branch"]: r for r in records if r["check"] == check}


def metrics_ok(rec):
    return all(m["value"] <= m["tolerance"] for m in rec["metrics"].values())


# sample counts giving >= 500 valid points per branch (>= 100 well-conditioned for curvature)
SAMPLES = {"cubic": 1000, "exponential": 2000}
CURVATURE_SAMPLES = {"cubic": 400, "exponential": 1000}


def test_criterion_1_linear_system():
    t0 = time.perf_counter()
    worst, runs, ok = 0.0, 0, True
    for family in ("cubic", "exponential"):
        for params in random_params(4, seed=1 if family == "cubic" else 2) + [{}]:
            (rec,), _ = sweep({"family": family, "checks": "linear", "samples": 1000, **params})
            ok &= rec["samples_total"] >= 1000 and rec["max_rel"] < 1e-9
            worst = max(worst, rec["max_rel"])
            runs += 1
    record(1, ok, f"{runs} parameter sets x 1000 points, six residuals, max_rel {worst:.2e} < 1e-9", t0)
    assert ok


def test_criterion_2_legendre_reconstruction():
    t0 = time.perf_counter()
    ok, worst_v, worst_r, n_min = True, 0.0, 0.0, 10**9
    for family in ("cubic", "exponential"):
        records, _ = sweep({"family": family, "checks": "legendre-roundtrip", "samples": SAMPLES[family]})
        for branch in ("+", "-"):
            rec = by_branch(records, "legendre-roundtrip")[branch]
            n_min = min(n_min, rec["samples_valid"])
            worst_v = max(worst_v, rec["metrics"]["legendre-roundtrip"]["value"])
            worst_r = max(worst_r, rec["metrics"]["v_rho"]["value"])
            ok &= rec["samples_valid"] >= 500 and metrics_ok(rec)
            ok &= rec["metrics"]["legendre-roundtrip"]["tolerance"] <= 1e-9
            ok &= rec["metrics"]["v_rho"]["tolerance"] <= 1e-10
    record(2, ok, f"v = w + rho r max {worst_v:.2e} < 1e-9, v_rho = r max {worst_r:.2e} < 1e-10, >= {n_min} valid points per family/branch", t0)
    assert ok


def test_criterion_3_transformed_cma():
    t0 = time.perf_counter()
    ok, worst, n_min = True, 0.0, 10**9
    for family in ("cubic", "exponential"):
        records, _ = sweep({"family": family, "checks": "veq", "samples": SAMPLES[family]})
        for branch in ("+", "-"):
            rec = by_branch(records, "veq")[branch]
            n_min = min(n_min, rec["samples_valid"])
            worst = max(worst, rec["max_rel"])
            ok &= rec["samples_valid"] >= 500 and rec["max_rel"] < 1e-8
    record(3, ok, f"veq max_rel {worst:.2e} < 1e-8, >= {n_min} valid points per family/branch", t0)
    assert ok


def test_criterion_4_polynomial_identity():
    t0 = time.perf_counter()
    records, _ = sweep({"family": "cubic", "checks": "polynom", "samples": 1000})
    ok, worst_p, worst_h, n_min = True, 0.0, 0.0, 10**9
    for branch in ("+", "-"):
        rec = by_branch(records, "polynom")[branch]
        n_min = min(n_min, rec["samples_valid"])
        worst_p = max(worst_p, rec["metrics"]["polynom"]["value"])
        worst_h = max(worst_h, rec["metrics"]["homogeneity"]["value"])
        ok &= rec["samples_valid"] >= 500 and worst_p < 1e-8 and worst_h < 1e-8
    record(4, ok, f"degree-6 identity max_rel {worst_p:.2e}, s = 2 homogeneity {worst_h:.2e} (both < 1e-8), >= {n_min} points per branch", t0)
    assert ok


def test_criterion_5_ricci_flat():
    t0 = time.perf_counter()
    ok, worst, riem_min, n_min, signs = True, 0.0, np.inf, 10**9, []
    for family in ("cubic", "exponential"):
        records, _ = sweep({"family": family, "checks": "ricci,signature", "samples": CURVATURE_SAMPLES[family]})
        ric, sig = by_branch(records, "ricci"), by_branch(records, "signature")
        for branch in ("+", "-"):
            r, s = ric[branch], sig[branch]
            n_min = min(n_min, r["samples_valid"])
            worst = max(worst, r["max_rel"])
            riem_min = min(riem_min, r["riemann_min"])
            ok &= r["samples_valid"] >= 100 and r["max_rel"] < 1e-6 and r["riemann_min"] > 1e-8
            # every well-conditioned sample is definite, so the connected region
            # around any definite seed point is definite as well
            ok &= s["verdict"] == "pass" and s["signature_counts"]["indefinite"] == 0
            c = s["signature_counts"]
            signs.append(f"{family}{branch}:{c['positive_definite']}+/{c['negative_definite']}-")
    record(
        5, ok,
        f"ricci/max(1,riemann) max {worst:.2e} < 1e-6, riemann min {riem_min:.2e} > 1e-8, "
        f">= {n_min} nondegenerate points; definite everywhere ({' '.join(signs)})", t0,
    )
    assert ok


def _sphere_factor(R):
    def field(x, order):
        th = jets.variable(2, x[..., 2], 4, order)
        s = jets.sin(th)
        g = [[0] * 4 for _ in range(4)]
        g[0][0] = g[1][1] = 1.0
        g[2][2] = R * R + 0 * s
        g[3][3] = R * R * s * s
        return g

    return field


def test_criterion_6_oracles():
    t0 = time.perf_counter()
    worst = 0.0
    for _, nv, fn, x0 in ANALYTIC_FUNCTIONS:
        xs = [jets.variable(i, x0[i], nv, 4) for i in range(nv)]
        jet = fn(JET_NS, *xs)
        f = lambda *x, fn=fn: fn(MP_NS, *x)  # noqa: E731
        for m in multi_indices(nv, 4):
            ref = richardson_partial(f, x0, m)
            got = complex(jets.partial(jet, m)).real
            worst = max(worst, abs(got - ref) / max(1.0, abs(ref)))
    R = 1.7
    x = np.array([[0.1, 0.2, 0.9, 0.3], [0.5, -0.4, 2.1, 1.0]])
    c = geometry.curvature(_sphere_factor(R), x)
    expected = np.zeros((2, 4, 4))
    expected[:, 2, 2] = 1
    expected[:, 3, 3] = np.sin(x[:, 2]) ** 2
    sphere_err = np.abs(c.ricci - expected).max()
    ok = len(ANALYTIC_FUNCTIONS) == 20 and worst < 1e-6 and sphere_err < 1e-8
    record(6, ok, f"20 functions, all partials to order 4 vs Richardson FD: max rel {worst:.2e} < 1e-6; 2-sphere factor Ricci error {sphere_err:.2e} < 1e-8", t0)
    assert ok


def test_criterion_7_negative_controls():
    t0 = time.perf_counter()
    eps = 1e-3
    # the harness must flag the perturbed family
    (rec,), status = sweep({"checks": "linear", "samples": 1000, "perturb_p4": eps})
    fails = status == harness.EXIT_FAIL and rec["verdict"] == "fail"
    # residual against the analytic leading term 12 eps p^2 of w_pp
    rng = np.random.Generator(np.random.Philox(7))
    x = rng.uniform(-2, 2, size=(5, 1000))
    p, z, r = x[0] + 1j * x[1], x[2] + 1j * x[3], x[4]
    sol = SpectralSolution.cubic(1, -0.5, 0.7, 1.3, 0.5, -1.5).with_perturbation(eps)
    res = residuals.linear_system_residuals(sol(spectral.point_jets(p, z, r, 2)))["linhom_1"]
    expected = 12 * eps * p**2
    mask = np.abs(p) > 0.1
    ratio = np.abs(res[mask]) / np.abs(expected[mask])
    within = bool((ratio > 0.1).all() and (ratio < 10).all())
    # hand value of the transformed operator on v = p pb + z zb
    pv, pbv, zv, zbv, rhov = (jets.variable(i, v, 5, 2) for i, v in enumerate((0.3 + 0.1j, 0.3 - 0.1j, -1j, 1j, 0.2)))
    veq = residuals.veq_residual(pv * pbv + zv * zbv)
    ok = fails and within and veq == -2.0
    record(7, ok, f"p^4 perturbation fails criterion 1 (max_rel {rec['max_rel']:.2e}); residual/(12 eps p^2) in [{ratio.min():.3f}, {ratio.max():.3f}]; veq(p pb + z zb) = {veq}", t0)
    assert ok


def test_criterion_8_determinism():
    t0 = time.perf_counter()
    cmd = [sys.executable, "-m", "monge_legendre", "verify", "--samples", "200", "--seed", "123456789"]
    outs = [subprocess.run(cmd, capture_output=True, check=False) for _ in range(2)]
    same_cli = outs[0].stdout == outs[1].stdout and len(outs[0].stdout) > 0
    cfg = {"family": "exponential", "samples": 300, "seed": 2**63 + 5}
    same_lib = harness.format_records(sweep(cfg)[0]) == harness.format_records(sweep(cfg)[0])
    ok = same_cli and same_lib and outs[0].returncode == outs[1].returncode
    record(8, ok, f"two CLI runs and two library runs with fixed seeds: byte-identical reports ({len(outs[0].stdout)} bytes)", t0)
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
