"""
Metrics built from the potentials and their curvature.

Real coordinates are fixed as ``x = (Re p, Im p, Re z, Im z)`` (or the same
pattern for ``z1, z2`` in the Kahler picture), so ``dp = dx0 + i dx1``.  A
complex quadratic form ``Q`` in ``(dp, dpb, dz, dzb)`` becomes the real metric
``J^T Q J`` with the constant Jacobian ``J`` below.

Curvature is computed from exact jet derivatives of the metric: first
derivatives for the Christoffel symbols, second derivatives for their
gradients.  A finite-difference mode exists only as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jets, spectral
from .jets import Jet
from .legendre import u_hessian_from_v

JACOBIAN = np.array(
    [[1, 1j, 0, 0], [1, -1j, 0, 0], [0, 0, 1, 1j], [0, 0, 1, -1j]], dtype=complex
)


# Curvature round-off grows like eps * cond(g)**2; above this condition number
# a sample is treated as lying on the degenerate locus.
COND_MAX = 1e4


class DegenerateMetricError(ValueError):
    pass


def well_conditioned(g: np.ndarray, cond_max: float = COND_MAX) -> np.ndarray:
    """Mask of real metrics ``batch + (4, 4)`` with condition number <= ``cond_max``."""
    g = np.asarray(g, dtype=float)
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(g)
    return np.isfinite(cond) & (cond <= cond_max)


def real_form(Q):
    """Real 4x4 form ``J^T Q J`` of a complex quadratic form (values or jets)."""
    out = [[0] * 4 for _ in range(4)]
    for a in range(4):
        for b in range(a, 4):
            acc = 0
            for i in range(4):
                for j in range(4):
                    c = JACOBIAN[i, a] * JACOBIAN[j, b]
                    if c != 0 and not _is_zero(Q[i][j]):
                        acc = acc + c * Q[i][j]
            out[a][b] = out[b][a] = acc
    return out


def _is_zero(x) -> bool:
    return not isinstance(x, Jet) and np.all(np.asarray(x) == 0)


def _stack(form, batch_shape) -> np.ndarray:
    """Constant terms of a 4x4 nested form as an array ``batch + (4, 4)``."""
    arr = np.empty(batch_shape + (4, 4), dtype=complex)
    for a in range(4):
        for b in range(4):
            arr[..., a, b] = jets.value(form[a][b])
    return arr


# -- Kahler metric ---------------------------------------------------------------


def kahler_form(u11, u12, u21, u22):
    """``2 u_{i jb} dz^i dzb^j`` as a symmetric form in ``(dz1, dz1b, dz2, dz2b)``."""
    Q = [[0] * 4 for _ in range(4)]
    Q[0][1] = Q[1][0] = u11
    Q[0][3] = Q[3][0] = u12
    Q[2][1] = Q[1][2] = u21
    Q[2][3] = Q[3][2] = u22
    return Q


def kahler_metric(u: Jet) -> np.ndarray:
    """Real metric of a Wirtinger jet ``u(z1, z1b, z2, z2b)``; shape ``batch + (4, 4)``."""
    from .residuals import d2

    Q = kahler_form(d2(u, 0, 1), d2(u, 0, 3), d2(u, 2, 1), d2(u, 2, 3))
    return np.real(_stack(real_form(Q), u.batch_shape))


def kahler_metric_from_hessian(h: np.ndarray) -> np.ndarray:
    """Same as :func:`kahler_metric` from mixed derivatives ``[[u11b, u12b], [u21b, u22b]]``."""
    h = np.asarray(h)
    Q = kahler_form(h[..., 0, 0], h[..., 0, 1], h[..., 1, 0], h[..., 1, 1])
    return np.real(_stack(real_form(Q), h.shape[:-2]))


# -- transformed metric ------------------------------------------------------------


def second_derivatives(v: Jet, coords: str = "wirtinger") -> dict:
    """Wirtinger second derivatives of ``v`` as jets two orders lower.

    ``coords`` says which variables ``v`` is expanded in: Wirtinger
    ``(p, pb, z, zb, ...)`` or real ``(Re p, Im p, Re z, Im z, ...)``.
    """
    if coords == "wirtinger":
        d = {"p": lambda f: f.diff(0), "pb": lambda f: f.diff(1),
             "z": lambda f: f.diff(2), "zb": lambda f: f.diff(3)}
    elif coords == "real":
        d = {"p": lambda f: 0.5 * (f.diff(0) - 1j * f.diff(1)),
             "pb": lambda f: 0.5 * (f.diff(0) + 1j * f.diff(1)),
             "z": lambda f: 0.5 * (f.diff(2) - 1j * f.diff(3)),
             "zb": lambda f: 0.5 * (f.diff(2) + 1j * f.diff(3))}
    else:
        raise ValueError(f"unknown coordinate mode {coords!r}")
    vp, vpb = d["p"](v), d["pb"](v)
    return {
        "pp": d["p"](vp),
        "pbpb": d["pb"](vpb),
        "ppb": d["pb"](vp),
        "pz": d["z"](vp),
        "pzb": d["zb"](vp),
        "pbz": d["z"](vpb),
        "pbzb": d["zb"](vpb),
        "zzb": d["zb"](d["z"](v)),
    }


def tranmetr_form(d: dict):
    """Legendre-transformed metric as a symmetric form in ``(dp, dpb, dz, dzb)``.

    With ``th1 = v_pbp dp + v_pbz dz`` and ``th2 = v_ppb dpb + v_pzb dzb``::

        ds^2 = (v_pp th1^2 + v_pbpb th2^2) / Delta
               + Delta_plus / (v_ppb Delta) th1 th2 + Delta / v_ppb dz dzb
    """
    vpp, vqq, vpq = d["pp"], d["pbpb"], d["ppb"]
    delta = vpp * vqq - vpq * vpq
    dplus = vpp * vqq + vpq * vpq
    e1 = [vpq, 0, d["pbz"], 0]
    e2 = [0, vpq, 0, d["pzb"]]
    c11 = vpp / delta
    c22 = vqq / delta
    c12 = dplus / (2 * vpq * delta)
    czz = delta / (2 * vpq)
    Q = [[0] * 4 for _ in range(4)]
    for i in range(4):
        for j in range(4):
            acc = 0
            for coef, a, b in ((c11, e1, e1), (c22, e2, e2), (c12, e1, e2), (c12, e2, e1)):
                if not (_is_zero(a[i]) or _is_zero(b[j])):
                    acc = acc + coef * a[i] * b[j]
            Q[i][j] = acc
    Q[2][3] = Q[2][3] + czz
    Q[3][2] = Q[3][2] + czz
    return Q, delta, dplus


@dataclass
class MetricSample:
    """Transformed metric at a batch of points (arrays carry the batch axes)."""

    point: np.ndarray
    g_complex: np.ndarray
    g_real: np.ndarray
    Delta: np.ndarray
    Delta_plus: np.ndarray
    v_ppb: np.ndarray
    det_g: np.ndarray
    imag_residue: np.ndarray
    asymmetry: np.ndarray
    signature: "Signature" = None


def transformed_metric(v: Jet, coords: str = "wirtinger", point=None) -> MetricSample:
    """Assemble the transformed metric from a ``v`` jet of order >= 2."""
    d = {k: jets.value(x) for k, x in second_derivatives(v, coords).items()}
    if np.any(d["ppb"] == 0):
        raise DegenerateMetricError("v_ppb = 0")
    if np.any(d["pp"] * d["pbpb"] - d["ppb"] ** 2 == 0):
        raise DegenerateMetricError("Delta = 0")
    Q, delta, dplus = tranmetr_form(d)
    batch = v.batch_shape
    gc = np.empty(batch + (4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            gc[..., i, j] = Q[i][j]
    gr = _stack(real_form(Q), batch)
    scale = np.maximum(np.abs(gr).max(axis=(-2, -1)), 1e-300)
    g = np.real(gr)
    sample = MetricSample(
        point=np.asarray(point) if point is not None else np.empty(batch + (0,)),
        g_complex=gc,
        g_real=g,
        Delta=np.real(delta),
        Delta_plus=np.real(dplus),
        v_ppb=np.real(d["ppb"]),
        det_g=np.linalg.det(g),
        imag_residue=np.abs(np.imag(gr)).max(axis=(-2, -1)) / scale,
        asymmetry=np.abs(g - np.swapaxes(g, -1, -2)).max(axis=(-2, -1)),
    )
    sample.signature = signature(g)
    return sample


def pulled_back_kahler(v: Jet) -> np.ndarray:
    """Kahler metric of the reconstructed ``u`` pulled back to ``(p, z)`` coordinates.

    Independent of the transformed-metric formula: it goes through the
    Hessian of ``u`` obtained from ``v`` and the Jacobian of
    ``(p, pb, z, zb) -> (z1, z1b, z2, z2b)``.  Returns the real metric in
    ``(Re p, Im p, Re z, Im z)``.
    """
    from .residuals import d2

    hu = u_hessian_from_v(v)
    h = np.array([[d2(v, i, j) for j in range(4)] for i in range(4)])
    h = np.moveaxis(h, (0, 1), (-2, -1))
    dZ = np.zeros_like(hu)
    dZ[..., 0, :] = -h[..., 0, :]
    dZ[..., 1, :] = -h[..., 1, :]
    dZ[..., 2, 2] = 1
    dZ[..., 3, 3] = 1
    M = np.zeros_like(hu)
    for i, j in ((0, 1), (0, 3), (2, 1), (2, 3)):
        M[..., i, j] = M[..., j, i] = hu[..., i, j]
    Q = np.swapaxes(dZ, -1, -2) @ M @ dZ
    return np.real(JACOBIAN.T @ Q @ JACOBIAN)


# -- signature -------------------------------------------------------------------


@dataclass
class Signature:
    n_pos: np.ndarray
    n_neg: np.ndarray
    definite: np.ndarray
    degenerate: np.ndarray
    sign: np.ndarray  # +1 / -1 for definite metrics, 0 otherwise


def signature(g: np.ndarray, rtol: float = 1e-10) -> Signature:
    """Eigenvalue sign counts of symmetric real matrices ``batch + (n, n)``."""
    g = np.asarray(g, dtype=float)
    ev = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, -1, -2)))
    tiny = np.abs(ev).max(axis=-1, keepdims=True) * rtol
    degenerate = (np.abs(ev) < tiny).any(axis=-1) | (np.abs(ev).max(axis=-1) == 0)
    n_pos = (ev > tiny).sum(axis=-1)
    n_neg = (ev < -tiny).sum(axis=-1)
    n = g.shape[-1]
    definite = ~degenerate & ((n_pos == n) | (n_neg == n))
    sign = np.where(definite, np.where(n_pos == n, 1, -1), 0)
    return Signature(n_pos, n_neg, definite, degenerate, sign)


# -- curvature -------------------------------------------------------------------


@dataclass
class CurvatureSample:
    christoffel: np.ndarray  # batch + (a, b, c): Gamma^a_{bc}
    ricci: np.ndarray
    riemann: np.ndarray  # batch + (a, b, c, d): R^a_{bcd}
    ricci_norm: np.ndarray
    riemann_norm: np.ndarray
    ricci_asymmetry: np.ndarray  # invariant norm of the antisymmetric part of ricci


def curvature_from_derivatives(g, dg, ddg) -> CurvatureSample:
    """Christoffel, Riemann and Ricci from the metric and its first two derivatives.

    Shapes: ``g`` is ``batch + (4, 4)``; ``dg[..., e, a, b] = d_e g_ab``;
    ``ddg[..., e, f, a, b] = d_e d_f g_ab``.
    """
    g, dg, ddg = (np.asarray(x, dtype=float) for x in (g, dg, ddg))
    gi = np.linalg.inv(g)
    first = 0.5 * (
        np.einsum("...bdc->...dbc", dg)
        + np.einsum("...cbd->...dbc", dg)
        - dg
    )
    gam = np.einsum("...ad,...dbc->...abc", gi, first)
    dfirst = 0.5 * (
        np.einsum("...ebdc->...edbc", ddg)
        + np.einsum("...ecbd->...edbc", ddg)
        - ddg
    )
    dgi = -np.einsum("...ai,...eij,...jd->...ead", gi, dg, gi)
    dgam = np.einsum("...ead,...dbc->...eabc", dgi, first) + np.einsum(
        "...ad,...edbc->...eabc", gi, dfirst
    )
    # R^a_{bcd} = d_c G^a_{db} - d_d G^a_{cb} + G^a_{ce} G^e_{db} - G^a_{de} G^e_{cb}
    riem = (
        np.einsum("...cadb->...abcd", dgam)
        - np.einsum("...dacb->...abcd", dgam)
        + np.einsum("...ace,...edb->...abcd", gam, gam)
        - np.einsum("...ade,...ecb->...abcd", gam, gam)
    )
    # R_{bc} = d_a G^a_{bc} - d_c G^a_{ba} + G^a_{ae} G^e_{bc} - G^a_{ce} G^e_{ba}
    ricci = (
        np.einsum("...aabc->...bc", dgam)
        - np.einsum("...caba->...bc", dgam)
        + np.einsum("...aae,...ebc->...bc", gam, gam)
        - np.einsum("...ace,...eba->...bc", gam, gam)
    )
    low = np.einsum("...ae,...ebcd->...abcd", g, riem)
    up = np.einsum("...bf,...cg,...dh,...afgh->...abcd", gi, gi, gi, riem)
    kretschmann = np.einsum("...abcd,...abcd->...", low, up)
    ric_sq = np.einsum("...ab,...ac,...bd,...cd->...", ricci, gi, gi, ricci)
    anti = 0.5 * (ricci - np.swapaxes(ricci, -1, -2))
    asym = np.sqrt(np.abs(np.einsum("...ab,...ac,...bd,...cd->...", anti, gi, gi, anti)))
    return CurvatureSample(
        gam, ricci, riem, np.sqrt(np.abs(ric_sq)), np.sqrt(np.abs(kretschmann)), asym
    )


def coordinate_jets(x, order: int):
    x = np.asarray(x, dtype=float)
    return tuple(jets.variable(i, x[..., i], 4, order) for i in range(4))


def _metric_arrays(form, batch, order: int):
    """g, dg, ddg (real parts) from a nested 4x4 form of jets / constants."""
    g = np.zeros(batch + (4, 4))
    dg = np.zeros(batch + (4, 4, 4))
    ddg = np.zeros(batch + (4, 4, 4, 4))
    for a in range(4):
        for b in range(4):
            e = form[a][b]
            if isinstance(e, Jet):
                g[..., a, b] = np.real(e.value)
                if order >= 1:
                    dg[..., a, b, :] = np.moveaxis(np.real(e.partials(1, range(4))), 0, -1)
                if order >= 2:
                    ddg[..., a, b, :, :] = np.moveaxis(np.real(e.partials(2, range(4))), (0, 1), (-2, -1))
            else:
                g[..., a, b] = np.real(e)
    return g, np.moveaxis(dg, -1, -3), np.moveaxis(ddg, (-2, -1), (-4, -3))


def curvature(metric_field: Callable, x, fd_step: float | None = None) -> CurvatureSample:
    """Curvature of ``metric_field`` at real coordinates ``x`` (shape ``batch + (4,)``).

    ``metric_field(x, order)`` returns a nested 4x4 form whose entries are
    jets in 4 real variables of the given order (or constants).  By default
    derivatives come from order-2 jets; with ``fd_step`` they come from
    central differences of order-0 evaluations instead.
    """
    x = np.asarray(x, dtype=float)
    batch = x.shape[:-1]
    if fd_step is None:
        g, dg, ddg = _metric_arrays(metric_field(x, 2), batch, 2)
    else:
        g, dg, ddg = _fd_metric_derivatives(metric_field, x, fd_step)
    if np.any(np.abs(np.linalg.det(g)) == 0):
        raise DegenerateMetricError("singular metric")
    return curvature_from_derivatives(g, dg, ddg)


def _fd_metric_derivatives(metric_field, x, h):
    batch = x.shape[:-1]

    def at(shift):
        return _metric_arrays(metric_field(x + shift, 0), batch, 0)[0]

    e = np.eye(4) * h
    g0 = at(np.zeros(4))
    dg = np.zeros(batch + (4, 4, 4))
    ddg = np.zeros(batch + (4, 4, 4, 4))
    plus = [at(e[i]) for i in range(4)]
    minus = [at(-e[i]) for i in range(4)]
    for i in range(4):
        dg[..., i, :, :] = (plus[i] - minus[i]) / (2 * h)
        ddg[..., i, i, :, :] = (plus[i] - 2 * g0 + minus[i]) / h**2
        for j in range(i + 1, 4):
            mixed = (at(e[i] + e[j]) - at(e[i] - e[j]) - at(e[j] - e[i]) + at(-e[i] - e[j])) / (4 * h**2)
            ddg[..., i, j, :, :] = ddg[..., j, i, :, :] = mixed
    return g0, dg, ddg


class TransformedMetricField:
    """Metric field in ``(Re p, Im p, Re z, Im z)`` at fixed ``rho`` from a ``v`` field.

    ``v_field`` maps ``(p, pb, z, zb, rho)`` jets to a ``v`` jet.
    """

    def __init__(self, v_field: Callable, rho):
        self.v_field = v_field
        self.rho = np.asarray(rho, dtype=float)

    def v_jet(self, x, order: int) -> Jet:
        x = np.asarray(x, dtype=float)
        p = x[..., 0] + 1j * x[..., 1]
        z = x[..., 2] + 1j * x[..., 3]
        pt = spectral.point_jets(p, z, self.rho, order, coords="real", num_vars=4)
        return self.v_field(pt)

    def __call__(self, x, order: int):
        d = second_derivatives(self.v_jet(x, order + 2), "real")
        Q = tranmetr_form(d)[0]
        return real_form(Q)


@dataclass
class NoninvarianceReport:
    gradient_max: np.ndarray  # per direction (Re p, Im p, Re z, Im z, rho): max |d v| over samples
    riemann_min: float
    depends_on_all: bool
    curved_everywhere: bool
    samples: int
    threshold: float = 1e-8

    @property
    def noninvariant(self) -> bool:
        return self.depends_on_all and self.curved_everywhere


def noninvariance_indicator(v_field: Callable, p, z, rho, threshold: float = 1e-8) -> NoninvarianceReport:
    """Necessary indicators that ``v`` is not invariant under a symmetry.

    (a) v depends on every one of the five real directions somewhere in the
    sample set; (b) the transformed metric is curved at every sample.
    Neither is a proof that Killing vectors are absent.
    """
    p, z, rho = (np.atleast_1d(np.asarray(a)) for a in (p, z, rho))
    if p.size < 10:
        raise ValueError("noninvariance indicator needs at least 10 samples")
    pt = spectral.point_jets(p, z, rho, 1, coords="real", num_vars=5)
    v = v_field(pt)
    grad = np.abs(np.real(v.partials(1))).max(axis=-1)
    field = TransformedMetricField(v_field, rho)
    x = np.stack([p.real, p.imag, z.real, z.imag], axis=-1)
    curv = curvature(field, x)
    riem_min = float(curv.riemann_norm.min())
    return NoninvarianceReport(
        grad,
        riem_min,
        bool(np.all(grad > threshold)),
        bool(riem_min > threshold),
        int(p.size),
        threshold,
    )
