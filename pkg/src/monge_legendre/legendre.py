"""
Legendre-transform machinery between w(p, pb, z, zb, r) and v(p, pb, z, zb, rho).

The one-dimensional transform is ``rho = -w_r``, ``v = w + rho r`` and
``r = v_rho``.  For the cubic family ``w_r + rho`` is quadratic in ``r``::

    w_r + rho == KLM_SCALE * (k r^2 + 2 l r + m),    k = C gamma + D delta

and for the exponential family it is quadratic in ``exp(r)``; both admit
closed-form inverses on two branches.  :func:`implicit_legendre` is the generic
route: Newton for ``r`` followed by Newton on jets, which propagates every
partial of ``v`` through the implicit function theorem.

Branches are labelled ``+1`` / ``-1`` (the sign in front of the square root).
Where a branch does not exist (negative discriminant, nonpositive logarithm
argument) the point is invalid; nothing switches sheets silently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jets, spectral
from .jets import Jet, partial
from .residuals import d2

KLM_SCALE = -3.0


class BranchError(ValueError):
    """The requested root branch does not exist at (some of) the points."""


class ConvergenceError(RuntimeError):
    pass


def branch_sign(branch) -> int:
    if branch in (1, "+", "+1", "plus"):
        return 1
    if branch in (-1, "-", "-1", "minus"):
        return -1
    raise ValueError(f"unknown branch {branch!r}")


@dataclass
class QuadraticData:
    k: float
    l: object
    m: object
    delta: object


@dataclass
class CubicVData:
    P2: object
    P3: object
    s_alpha: object
    s_beta: object
    l_alpha: object
    l_beta: object


@dataclass
class LegendrePoint:
    """Batch of physical samples with the solved group parameter."""

    p: np.ndarray
    z: np.ndarray
    rho: np.ndarray
    branch: int
    r: np.ndarray
    valid: np.ndarray


# -- cubic family --------------------------------------------------------------


def _cubic_blocks(sol, point4, rho):
    if sol.family != "cubic":
        raise ValueError("closed-form cubic inverse needs the two-term cubic family")
    pt = tuple(point4) + (0.0,)
    (ta, tb) = sol.terms
    xa, _, ma, g = spectral.building_blocks(ta.alpha, pt)
    xb, _, mb, d = spectral.building_blocks(tb.alpha, pt)
    return ta, tb, xa, ma, g, xb, mb, d


def cubic_klm(sol, point4, rho) -> QuadraticData:
    """Coefficients of ``k r^2 + 2 l r + m = 0`` equivalent to ``w_r + rho = 0``."""
    ta, tb, xa, ma, g, xb, mb, d = _cubic_blocks(sol, point4, rho)
    A, C, B, D = ta.A, ta.C, tb.A, tb.C
    k = C * g + D * d
    l = g * (A * xa + C * ma) + d * (B * xb + D * mb)
    m = (
        g * (2 * A * xa * ma + C * ma**2)
        + d * (2 * B * xb * mb + D * mb**2)
        - C * xa**2
        - D * xb**2
        - rho / 3
    )
    return QuadraticData(k, l, m, l * l - k * m)


def solve_r(q: QuadraticData, branch) -> np.ndarray:
    """Real root of the quadratic on the requested branch (plain values)."""
    s = branch_sign(branch)
    l, m, delta = (np.real(jets.value(x)) for x in (q.l, q.m, q.delta))
    k = float(np.real(q.k))
    if k == 0:
        if np.any(l == 0):
            raise BranchError("fully degenerate quadratic (k = l = 0)")
        return -m / (2 * l)
    if np.any(delta < 0):
        raise BranchError("negative discriminant: no real root on this branch")
    return (-l + s * np.sqrt(delta)) / k


def cubic_valid(sol, p, z, rho) -> np.ndarray:
    q = cubic_klm(sol, (p, np.conj(p), z, np.conj(z)), rho)
    return (np.real(q.delta) > 0) & (q.k != 0)


def cubic_v(sol, point4, rho, branch):
    """Closed-form ``v = (P3 +- sqrt(Delta) P2) / k^3``; works on values and jets."""
    s = branch_sign(branch)
    ta, tb, xa, ma, g, xb, mb, d = _cubic_blocks(sol, point4, rho)
    A, C, B, D = ta.A, ta.C, tb.A, tb.C
    q = cubic_klm(sol, point4, rho)
    k, l, dl = q.k, q.l, q.delta
    if k == 0:
        raise BranchError("k = 0: closed form needs a genuine quadratic")
    if np.any(np.real(jets.value(dl)) < 0):
        raise BranchError("negative discriminant: branch does not exist")
    sa, sb = k * xa, k * xb
    la, lb = l - k * ma, l - k * mb
    P2 = (
        6 * (A * g * sa * la + B * d * sb * lb)
        + C * (3 * sa**2 - g * (dl + 3 * la**2))
        + D * (3 * sb**2 - d * (dl + 3 * lb**2))
        + k**2 * rho
    )
    P3 = (
        A * (sa**3 - 3 * g * sa * (dl + la**2))
        + B * (sb**3 - 3 * d * sb * (dl + lb**2))
        - 3 * C * la * (sa**2 - g * (dl + la**2 / 3))
        - 3 * D * lb * (sb**2 - d * (dl + lb**2 / 3))
        - k**2 * rho * l
    )
    v = (P3 + s * jets.sqrt(dl) * P2) / k**3
    return v, CubicVData(P2, P3, sa, sb, la, lb)


def polynom_terms(sol, point4, rho, v):
    """Terms of ``k^6 v^2 - 2 k^3 P3 v + P3^2 - Delta P2^2`` (plain values)."""
    q = cubic_klm(sol, point4, rho)
    _, data = cubic_v(sol, point4, rho, +1)
    k, P2, P3, dl = q.k, data.P2, data.P3, q.delta
    t = [k**6 * v**2, -2 * k**3 * P3 * v, P3**2, -dl * P2**2]
    return t[0] + t[1] + t[2] + t[3], t


# -- exponential family ----------------------------------------------------------


def _exp_parts(sol, point4, rho, branch):
    s = branch_sign(branch)
    G, H = spectral.exp_factors(sol, tuple(point4) + (0.0,))
    radicand = rho * rho + 4 * G * H
    return s, G, H, radicand


def exp_valid(sol, p, z, rho, branch) -> np.ndarray:
    s, G, H, rad = _exp_parts(sol, (p, np.conj(p), z, np.conj(z)), rho, branch)
    rad, H = np.real(rad), np.real(H)
    ok = (rad > 0) & (H != 0)
    # sign of the log argument (-rho + s S) / 2H
    S = np.sqrt(np.where(ok, rad, 0))
    num_sign = np.sign(-np.real(rho) + s * S)
    return ok & (num_sign * np.sign(H) > 0)


def exp_r(sol, point4, rho, branch):
    """``r = ln((-rho +- sqrt(rho^2 + 4GH)) / (2H))``."""
    s, G, H, rad = _exp_parts(sol, point4, rho, branch)
    if np.any(jets.value(H) == 0):
        raise BranchError("H = 0: exponential inverse degenerates")
    if np.any(np.real(jets.value(rad)) < 0):
        raise BranchError("negative radicand: branch does not exist")
    root = jets.sqrt(rad)
    # (-rho + s S) / 2H == 2G / (rho + s S); take the form without cancellation
    stable = s * np.real(jets.value(rho)) >= 0
    den = rho + s * root + np.where(stable, 0.0, 1.0)
    direct = (-rho + s * root) / (2 * H)
    rationalized = 2 * G / den
    if isinstance(direct, Jet):
        rationalized = rationalized + 0 * direct
        arg = Jet(
            np.where(stable, rationalized.coeffs, direct.coeffs), direct.num_vars, direct.order
        )
    else:
        arg = np.where(stable, rationalized, direct)
    if np.any(np.real(jets.value(arg)) <= 0):
        raise BranchError("nonpositive logarithm argument on this branch")
    return jets.log(arg)


def exp_v(sol, point4, rho, branch):
    """Closed-form ``v = +-sqrt(rho^2 + 4GH) + rho r``."""
    s, G, H, rad = _exp_parts(sol, point4, rho, branch)
    return s * jets.sqrt(rad) + rho * exp_r(sol, point4, rho, branch)


# -- fields and sample points ------------------------------------------------------


def closed_form_v(sol, branch) -> Callable:
    """``v`` as a field: callable on ``(p, pb, z, zb, rho)`` jets or values."""
    if sol.family == "cubic":
        return lambda pt: cubic_v(sol, pt[:4], pt[4], branch)[0]
    if sol.family == "exponential":
        return lambda pt: exp_v(sol, pt[:4], pt[4], branch)
    raise ValueError("closed-form v exists only for the cubic and exponential families")


def closed_form_r(sol, p, z, rho, branch) -> np.ndarray:
    pt = (p, np.conj(p), z, np.conj(z))
    if sol.family == "cubic":
        return solve_r(cubic_klm(sol, pt, rho), branch)
    return np.real(exp_r(sol, pt, rho, branch))


def legendre_points(sol, p, z, rho, branch) -> LegendrePoint:
    """Solve for r on one branch, flagging the points where the branch exists."""
    s = branch_sign(branch)
    p, z, rho = (np.atleast_1d(np.asarray(x)) for x in (p, z, rho))
    if sol.family == "cubic":
        valid = cubic_valid(sol, p, z, rho)
    elif sol.family == "exponential":
        valid = exp_valid(sol, p, z, rho, s)
    else:
        raise ValueError("closed-form branches exist only for cubic and exponential families")
    r = np.full(p.shape, np.nan)
    if valid.any():
        r[valid] = closed_form_r(sol, p[valid], z[valid], rho[valid], s)
    return LegendrePoint(p, z, rho, s, r, valid)


# -- generic engine -----------------------------------------------------------------


@dataclass
class ImplicitResult:
    r: np.ndarray
    v: np.ndarray
    v_jet: Jet | None
    converged: np.ndarray


def _newton_r(w_field, values, rho0, r0, tol, maxiter):
    const = [jets.constant(x, 1, 2) for x in values]
    r = np.array(np.real(r0), dtype=float, copy=True)
    done = np.zeros(r.shape, dtype=bool)
    wrr = np.ones(r.shape)
    for _ in range(maxiter):
        with np.errstate(all="ignore"):
            W = w_field(tuple(const) + (jets.variable(0, r, 1, 2),))
        f = np.real(partial(W, (1,))) + rho0
        wrr = np.real(partial(W, (2,)))
        with np.errstate(all="ignore"):
            step = np.where(wrr != 0, f / wrr, np.nan)
        step = np.where(done, 0.0, step)
        r = r - step
        done |= np.abs(step) <= tol * np.maximum(1.0, np.abs(r))
        if done.all() or not np.isfinite(r).any():
            break
    return r, done & np.isfinite(r) & (wrr != 0)


def implicit_legendre(
    w_field: Callable,
    point,
    seed_r,
    tol: float = 1e-12,
    maxiter: int = 50,
    strict: bool = True,
) -> ImplicitResult:
    """Invert ``rho = -w_r`` by Newton and return ``v = w + rho r``.

    Parameters
    ----------
    w_field : callable
        Maps a 5-tuple ``(p, pb, z, zb, r)`` of jets to a jet.
    point : tuple
        ``(p, pb, z, zb, rho)``, either plain values or jets sharing
        ``num_vars`` and ``order``.  When jets are given, ``v_jet`` carries
        all partials of ``v`` in those variables; ``r`` becomes a jet solving
        ``w_r(x, r(x)) + rho(x) = 0`` degree by degree.
    seed_r : array_like
        Starting value(s) for the scalar Newton iteration.
    """
    as_jets = isinstance(point[0], Jet)
    values = [np.asarray(jets.value(x), dtype=complex) for x in point]
    shape = np.broadcast_shapes(*(v.shape for v in values), np.shape(seed_r))
    values = [np.broadcast_to(v, shape) for v in values]
    rho0 = np.real(values[4])
    r0, ok = _newton_r(w_field, values[:4], rho0, np.broadcast_to(seed_r, shape), tol, maxiter)
    if strict and not ok.all():
        raise ConvergenceError("Newton for r did not converge (or w_rr = 0) at some points")
    if not as_jets:
        W = w_field(tuple(values[:4]) + (r0,))
        return ImplicitResult(r0, np.real(W) + rho0 * r0, None, ok)

    n, N = point[0].num_vars, point[0].order
    if n + 1 > jets.MAX_VARS or N + 1 > jets.MAX_ORDER:
        raise ValueError("implicit jets need one spare variable and one spare order")
    ext = [x.extend(n + 1, N + 1) for x in point[:4]]
    t = jets.variable(n, np.zeros(shape), n + 1, N + 1)
    rho = point[4]
    r_jet = jets.constant(np.where(ok, r0, 0.0), n, N)
    W = None
    # each pass fixes at least one more Taylor degree of r, so N + 2 passes suffice
    for _ in range(min(maxiter, N + 2)):
        W = w_field(tuple(ext) + (r_jet.extend(n + 1, N + 1) + t,))
        Wt = W.diff(n)
        F = Wt.restrict(n) + rho
        Ftt = Wt.diff(n).restrict(n).extend(order=N)
        Ftt.coeffs[0] = np.where(ok, Ftt.coeffs[0], 1.0)
        step = F / Ftt
        step = Jet(np.where(ok, step.coeffs, 0), n, N)
        r_jet = r_jet - step
        scale = np.maximum(1.0, np.abs(r_jet.coeffs).max(axis=0))
        if np.all(np.abs(step.coeffs).max(axis=0) <= 1e-15 * scale):
            break
    W = w_field(tuple(ext) + (r_jet.extend(n + 1, N + 1) + t,))
    v_jet = W.restrict(n).truncate(N) + rho * r_jet
    return ImplicitResult(r0, np.real(v_jet.value), v_jet, ok)


def check_det_D(w: Jet) -> np.ndarray:
    """Determinant of the (p, pb, r) Hessian block of ``w``; nonzero where the
    three-dimensional Legendre transform exists."""
    P, PB, R = 0, 1, 4
    idx = (P, PB, R)
    h = np.array([[d2(w, i, j) for j in idx] for i in idx])
    h = np.moveaxis(h, (0, 1), (-2, -1))
    return np.real(np.linalg.det(h))


# -- two-dimensional inverse (back to the Monge-Ampere potential u) -----------------


def u_hessian_from_v(v: Jet) -> np.ndarray:
    """Complex Hessian of ``u`` in ``(z1, z1b, z2, z2b)`` from a Wirtinger ``v`` jet.

    Uses ``z1 = -v_p``, ``u_{z1} = p``, ``u_{z1b} = pb``, ``u_{z2} = v_z``.
    Returns shape ``batch + (4, 4)``.
    """
    P, PB, Z, ZB = range(4)
    h = np.array([[d2(v, i, j) for j in range(4)] for i in range(4)])
    h = np.moveaxis(h, (0, 1), (-2, -1))
    batch = h.shape[:-2]
    dZ = np.zeros(batch + (4, 4), dtype=complex)
    dZ[..., 0, :] = -h[..., P, :]
    dZ[..., 1, :] = -h[..., PB, :]
    dZ[..., 2, Z] = 1
    dZ[..., 3, ZB] = 1
    dG = np.zeros_like(dZ)
    dG[..., 0, P] = 1
    dG[..., 1, PB] = 1
    dG[..., 2, :] = h[..., Z, :]
    dG[..., 3, :] = h[..., ZB, :]
    return dG @ np.linalg.inv(dZ)


def _solve_p(v_field, z1, z, rho, p, tol, maxiter):
    """Newton for ``v_p(p, pb, z, zb, rho) = -z1``; returns ``(p, u, grad_u, ok)``.

    ``grad_u`` holds ``(u_z1, u_z2) = (p, v_z)``, the exact gradient of the
    reconstructed potential.
    """
    ok = np.zeros(p.shape, dtype=bool)
    for _ in range(maxiter):
        V = v_field(spectral.point_jets(p, z, rho, 2))
        vp, vpb = partial(V, (1, 0, 0, 0, 0)), partial(V, (0, 1, 0, 0, 0))
        a, b = d2(V, 0, 0), d2(V, 0, 1)
        c, d = d2(V, 1, 0), d2(V, 1, 1)
        f1, f2 = vp + z1, vpb + np.conj(z1)
        det = a * d - b * c
        if np.any(det == 0):
            raise ConvergenceError("singular (p, pb) Hessian of v")
        dp = -(d * f1 - b * f2) / det
        p = p + dp
        ok = np.abs(dp) <= tol * np.maximum(1.0, np.abs(p))
        if ok.all():
            break
    V = v_field(spectral.point_jets(p, z, rho, 1))
    vp, vpb = partial(V, (1, 0, 0, 0, 0)), partial(V, (0, 1, 0, 0, 0))
    u = np.real(V.value - p * vp - np.conj(p) * vpb)
    grad = np.stack([p, partial(V, (0, 0, 1, 0, 0))])
    return p, u, grad, ok


@dataclass
class Inversion2D:
    p: np.ndarray
    u: np.ndarray
    cma_residual: np.ndarray  # u_11b u_22b - u_12b u_21b - 1
    cma_relative: np.ndarray  # the same divided by max(|u_11b u_22b|, |u_12b u_21b|, 1)
    fd_error: np.ndarray  # step-halving estimate of the Hessian error
    u_hessian: np.ndarray  # (..., 2, 2): [[u_11b, u_12b], [u_21b, u_22b]]
    converged: np.ndarray


def invert_legendre_2d(
    v_field: Callable,
    target_z1,
    z,
    rho,
    seed_p,
    h: float = 3e-4,
    tol: float = 1e-13,
    maxiter: int = 50,
) -> Inversion2D:
    """Recover ``u(z1, z1b, z2, z2b)`` from ``v`` and check the Monge-Ampere equation.

    Solves ``v_p(p, pb, z, zb, rho) = -z1`` for ``p`` by Newton and sets
    ``u = v - p v_p - pb v_pb``.  The gradient of ``u`` is known exactly
    (``u_z1 = p``, ``u_z2 = v_z``), so the mixed second derivatives come from
    central differences of the gradient in the real coordinates of
    ``(z1, z2)``; one step halving plus Richardson extrapolation gives both
    the Hessian and an error estimate.
    """
    z1 = np.atleast_1d(np.asarray(target_z1, dtype=complex))
    z = np.broadcast_to(np.asarray(z, dtype=complex), z1.shape)
    rho = np.broadcast_to(np.asarray(rho, dtype=float), z1.shape)
    p0 = np.broadcast_to(np.asarray(seed_p, dtype=complex), z1.shape)
    p, u, _, ok = _solve_p(v_field, z1, z, rho, p0, tol, maxiter)
    if not ok.all():
        raise ConvergenceError("Newton for p did not converge")

    def grad_at(dz1, dz2):
        return _solve_p(v_field, z1 + dz1, z + dz2, rho, p, tol, maxiter)[2]

    def conj_derivs(step):
        # d/d(zb_j) of (u_z1, u_z2): (d_a + i d_b) / 2 in the real coordinates of z_j
        out = []
        for j in range(2):
            da = np.zeros(2, dtype=complex)
            db = np.zeros(2, dtype=complex)
            da[j], db[j] = step, 1j * step
            dA = (grad_at(*da) - grad_at(*-da)) / (2 * step)
            dB = (grad_at(*db) - grad_at(*-db)) / (2 * step)
            out.append((dA + 1j * dB) / 2)
        return np.stack(out, axis=1)  # [i, j] = u_{z_i zb_j}

    coarse, fine = conj_derivs(h), conj_derivs(h / 2)
    hr = (4 * fine - coarse) / 3
    err = np.abs(hr - fine).max(axis=(0, 1))
    hess = np.moveaxis(hr, (0, 1), (-2, -1))
    a = hess[..., 0, 0] * hess[..., 1, 1]
    b = hess[..., 0, 1] * hess[..., 1, 0]
    res = np.real(a - b) - 1.0
    rel = np.abs(res) / np.maximum.reduce([np.abs(a), np.abs(b), np.ones(res.shape)])
    return Inversion2D(p, u, res, rel, err, hess, ok)


def cma_from_v(v: Jet, epsilon: int = 1) -> np.ndarray:
    """Monge-Ampere residual of the potential reconstructed from ``v`` (exact jets)."""
    hu = u_hessian_from_v(v)
    return np.real(hu[..., 0, 1] * hu[..., 2, 3] - hu[..., 0, 3] * hu[..., 2, 1]) - epsilon
