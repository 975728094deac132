import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from monge_legendre import jets, residuals, spectral
from monge_legendre.residuals import ResidualReport
from monge_legendre.spectral import SpectralSolution


def wirtinger(values, order=2):
    n = len(values)
    return [jets.variable(i, v, n, order) for i, v in enumerate(values)]


U0 = (0.3 + 0.1j, 0.3 - 0.1j, -0.2 + 0.5j, -0.2 - 0.5j)


def test_cma_examples():
    z1, z1b, z2, z2b = wirtinger(U0)
    assert residuals.cma_residual(z1 * z1b + z2 * z2b) == pytest.approx(0)
    assert residuals.cma_residual(2 * z1 * z1b + z2 * z2b) == pytest.approx(1)
    assert residuals.cma_residual(z1 * z1b - z2 * z2b, epsilon=-1) == pytest.approx(0)


def test_symcond_examples():
    z1, z1b, z2, z2b = wirtinger(U0)
    u = z1 * z1b + z2 * z2b
    assert residuals.symcond_residual(u, u) == pytest.approx(2)
    assert residuals.symcond_residual(u, 0 * z1 + 3.0) == pytest.approx(0)
    assert residuals.symcond_residual(u, z1) == pytest.approx(0)


def test_linear_system_quadratic_example():
    p, pb, z, zb, r = wirtinger((0.4 + 0.2j, 0.4 - 0.2j, 1 - 1j, 1 + 1j, 0.7))
    w = (p + pb) ** 2 - (r - z - zb) ** 2
    for name, res in residuals.linear_system_residuals(w).items():
        assert abs(res) < 1e-14, name


def test_linear_system_single_monomial():
    p, pb, z, zb, r = wirtinger((0.4 + 0.2j, 0.4 - 0.2j, 1 - 1j, 1 + 1j, 0.7))
    res = residuals.linear_system_residuals(p * r)
    assert res.pop("linhom_2") == pytest.approx(1)
    assert all(abs(v) < 1e-15 for v in res.values())


def test_veq_examples():
    p, pb, z, zb, rho = wirtinger((0.4 + 0.2j, 0.4 - 0.2j, 1 - 1j, 1 + 1j, 0.7))
    assert residuals.veq_residual(p * pb + p * zb + pb * z) == pytest.approx(0)
    assert residuals.veq_residual(p * pb + z * zb) == -2


@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(seed, a, b):
    rng = np.random.default_rng(seed)
    n = jets.basis(5, 2).size
    w1 = jets.Jet(rng.normal(size=n) + 1j * rng.normal(size=n), 5, 2)
    w2 = jets.Jet(rng.normal(size=n) + 1j * rng.normal(size=n), 5, 2)
    lam = np.exp(1j * rng.uniform(0, 2 * np.pi))
    lhs = residuals.linear_system_residuals(a * w1 + b * w2, lam)
    r1, r2 = residuals.linear_system_residuals(w1, lam), residuals.linear_system_residuals(w2, lam)
    for k in lhs:
        assert abs(lhs[k] - (a * r1[k] + b * r2[k])) < 1e-12 * (1 + abs(a) + abs(b)) * 10


def test_conjugation_symmetry():
    rng = np.random.default_rng(7)
    x = rng.uniform(-2, 2, size=(5, 100))
    pt = spectral.point_jets(x[0] + 1j * x[1], x[2] + 1j * x[3], x[4], 2)
    # an arbitrary real field, not a solution
    p, pb, z, zb, r = pt
    w = jets.exp(0.3 * (p + pb)) * (z * zb + r**3) + (p * p * zb + pb * pb * z)
    lam = np.exp(0.4j)
    res = residuals.linear_system_residuals(w, lam)
    assert np.allclose(res["linhom_1c"], np.conj(res["linhom_1"]), rtol=1e-13, atol=1e-12)
    assert np.allclose(res["linhom_2c"], np.conj(res["linhom_2"]), rtol=1e-13, atol=1e-12)


def test_lambda_guards_sign_conventions():
    sol = SpectralSolution.cubic(0.9, -1.4, 0.3, 0.8, 0.7, -1.3)
    x = np.random.default_rng(8).uniform(-2, 2, size=(5, 50))
    w = sol(spectral.point_jets(x[0] + 1j * x[1], x[2] + 1j * x[3], x[4], 2))
    bad = residuals.linear_system_terms(w, lam=-1.0)
    assert residuals.relative(*bad["linhom_1"]).max() > 1e-3


def test_report_scale_invariance():
    sol = SpectralSolution.cubic(0.9, -1.4, 0.3, 0.8, 0.7, -1.3)
    x = np.random.default_rng(9).uniform(-2, 2, size=(5, 200))
    pt = spectral.point_jets(x[0] + 1j * x[1], x[2] + 1j * x[3], x[4], 2)
    w = sol(pt) + 1e-6 * pt[0] ** 2 * pt[4] ** 2  # small non-solution part
    reps = []
    for c in (10.0, 1e4):
        res, terms = residuals.linear_system_terms(c * w)["lin8"]
        reps.append(ResidualReport.from_samples("lin8", res, terms, 1e-9))
    assert reps[0].max_rel == pytest.approx(reps[1].max_rel, rel=1e-10)


def test_report_merge_and_json():
    res = np.array([1e-12, 3e-10, 2e-3])
    terms = [np.array([1.0, 2.0, 10.0]), np.array([1.0, 1.0, 1.0])]
    pts = np.arange(9.0).reshape(3, 3)
    a = ResidualReport.from_samples("lin8", res[:2], [t[:2] for t in terms], 1e-9, pts[:2])
    b = ResidualReport.from_samples("lin8", res[2:], [t[2:] for t in terms], 1e-9, pts[2:])
    assert a.verdict == "pass" and b.verdict == "fail"
    m = a.merge(b)
    assert m.samples == 3 and m.verdict == "fail"
    assert m.max_rel == pytest.approx(2e-4)
    assert m.worst_point == [6.0, 7.0, 8.0]
    assert ResidualReport.from_json(m.to_json()) == m
    with pytest.raises(ValueError):
        a.merge(ResidualReport.from_samples("veq", res, terms, 1e-9))
