"""
Solution families of the six-equation linear system.

Every solution here is built from the complex combinations

    xi_a  = p + pb + i*a*(pb - p)
    mu_a  = (a+i)/(a-i) * z + (a-i)/(a+i) * zb
    eta_a = sqrt(a^2 + 1) * (r + mu_a)

and a term ``F(xi + i*eta) + conjugate``.  The "conjugate" half is written
holomorphically as ``conj(F)(xi - i*eta)`` so that the same code works off the
real slice and on jets.  A point is the 5-tuple ``(p, pb, z, zb, r)`` where
``pb`` and ``zb`` are independent variables; the real slice is
``pb = conj(p)``, ``zb = conj(z)``, ``r`` real.

Linear combinations of solutions are solutions, so the continuous spectral
integral is realised by finite quadrature (:func:`quadrature`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from decimal import Decimal, InvalidOperation
from typing import Callable, Sequence

import numpy as np

from . import jets
from .jets import Jet

PROFILES = ("cubic", "exponential", "power")


@dataclass(frozen=True)
class SpectralTerm:
    """One discrete spectral component ``F(xi_a + i eta_a) + c.c.``.

    ``A`` and ``C`` are the real amplitudes used in the closed-form families.
    For polynomial profiles ``a = (A - i C / sqrt(gamma)) / 2`` multiplies
    ``(xi + i eta)^n``; for the exponential profile ``a = (A - i C) / 2``
    multiplies ``exp(orientation * i (xi + i eta) / sqrt(gamma))``.
    """

    alpha: float
    A: float
    C: float
    profile: str = "cubic"
    power: int = 3
    orientation: int = 1

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}")
        if self.profile == "cubic" and self.power != 3:
            raise ValueError("cubic profile has power 3")
        if self.profile == "power" and not 0 <= self.power <= 4:
            raise ValueError("power profile needs 0 <= n <= 4")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")

    @property
    def gamma(self) -> float:
        return self.alpha**2 + 1.0

    @property
    def theta(self) -> float:
        """Angle with cos = 1/sqrt(gamma), sin = alpha/sqrt(gamma)."""
        return math.atan(self.alpha)

    @property
    def amplitude(self) -> complex:
        if self.profile == "exponential":
            return complex(self.A, -self.C) / 2
        return complex(self.A, -self.C / math.sqrt(self.gamma)) / 2

    def evaluate(self, point):
        xi, eta, _, gamma = building_blocks(self.alpha, point)
        a = self.amplitude
        x, y = xi + 1j * eta, xi - 1j * eta
        if self.profile == "exponential":
            s = self.orientation / math.sqrt(gamma)
            return a * jets.exp(1j * s * x) + a.conjugate() * jets.exp(-1j * s * y)
        return a * x**self.power + a.conjugate() * y**self.power


@dataclass(frozen=True)
class SpectralSolution:
    """Finite sum of spectral terms; ``lam`` is the unit constant of the system."""

    terms: tuple[SpectralTerm, ...]
    lam: complex = 1.0
    perturb_p4: float = 0.0

    def __post_init__(self):
        if not self.terms:
            raise ValueError("a spectral solution needs at least one term")
        if not math.isclose(abs(self.lam), 1.0, rel_tol=0, abs_tol=1e-12):
            raise ValueError("lambda must have unit modulus")

    @classmethod
    def cubic(cls, A, B, C, D, alpha, beta) -> "SpectralSolution":
        return cls((SpectralTerm(alpha, A, C, "cubic"), SpectralTerm(beta, B, D, "cubic")))

    @classmethod
    def exponential(cls, A, B, C, D, alpha, beta) -> "SpectralSolution":
        return cls(
            (
                SpectralTerm(alpha, A, C, "exponential", orientation=1),
                SpectralTerm(beta, B, D, "exponential", orientation=-1),
            )
        )

    @property
    def family(self) -> str:
        profiles = {t.profile for t in self.terms}
        if len(self.terms) == 2 and profiles == {"cubic"}:
            return "cubic"
        if (
            len(self.terms) == 2
            and profiles == {"exponential"}
            and [t.orientation for t in self.terms] == [1, -1]
        ):
            return "exponential"
        return "general"

    def constants(self) -> dict:
        """A, B, C, D, alpha, beta of a two-term closed-form family."""
        t, u = self.terms[:2]
        return {"A": t.A, "B": u.A, "C": t.C, "D": u.C, "alpha": t.alpha, "beta": u.alpha}

    def with_perturbation(self, eps: float) -> "SpectralSolution":
        """Same solution plus ``eps * p**4`` (not a solution; used as a control)."""
        return replace(self, perturb_p4=float(eps))

    def __call__(self, point):
        total = sum(t.evaluate(point) for t in self.terms)
        if self.perturb_p4:
            total = total + self.perturb_p4 * point[0] ** 4
        return total

    # -- plain-text record ---------------------------------------------------

    def to_record(self) -> str:
        lines = [f"lambda = {_fmt_complex(self.lam)}"]
        if self.perturb_p4:
            lines.append(f"perturb_p4 = {self.perturb_p4!r}")
        for i, t in enumerate(self.terms):
            lines.append(
                f"term.{i} = {t.profile} alpha={t.alpha!r} A={t.A!r} C={t.C!r} "
                f"power={t.power} orientation={t.orientation:+d}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_record(cls, text: str) -> "SpectralSolution":
        lam, eps, terms = 1.0 + 0j, 0.0, {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, rest = (s.strip() for s in line.partition("="))
            if key == "lambda":
                lam = complex(rest.replace(" ", ""))
            elif key == "perturb_p4":
                eps = parse_decimal(rest)
            elif key.startswith("term."):
                profile, *fields = rest.split()
                kv = dict(f.split("=", 1) for f in fields)
                terms[int(key[5:])] = SpectralTerm(
                    alpha=parse_decimal(kv["alpha"]),
                    A=parse_decimal(kv["A"]),
                    C=parse_decimal(kv["C"]),
                    profile=profile,
                    power=int(kv.get("power", 3)),
                    orientation=int(kv.get("orientation", 1)),
                )
            else:
                raise ValueError(f"unknown key {key!r} in solution record")
        return cls(tuple(terms[i] for i in sorted(terms)), lam, eps)


def parse_decimal(text: str) -> float:
    """Parse a decimal string exactly, then round once to float."""
    try:
        return float(Decimal(text.strip()))
    except InvalidOperation as exc:
        raise ValueError(f"not a decimal number: {text!r}") from exc


def _fmt_complex(z: complex) -> str:
    z = complex(z)
    return repr(z.real) if z.imag == 0 else f"{z.real!r}{z.imag:+}j"


def building_blocks(alpha: float, point):
    """Return ``(xi, eta, mu, gamma)`` for spectral parameter ``alpha``."""
    p, pb, z, zb, r = point
    gamma = alpha * alpha + 1.0
    xi = p + pb + 1j * alpha * (pb - p)
    rot = (alpha + 1j) / (alpha - 1j)
    mu = rot * z + zb / rot
    eta = math.sqrt(gamma) * (r + mu)
    return xi, eta, mu, gamma


def cubic_w(sol: SpectralSolution, point):
    """The two-term cubic family in its real-amplitude form."""
    if sol.family != "cubic":
        raise ValueError("cubic_w needs exactly two cubic terms")
    r = point[4]
    total = 0
    for t in sol.terms:
        xi, _, mu, g = building_blocks(t.alpha, point)
        s = r + mu
        total = total + t.A * (xi**3 - 3 * g * xi * s**2) + t.C * (3 * xi**2 * s - g * s**3)
    return total


def exp_factors(sol: SpectralSolution, point):
    """``(G, H)`` of the exponential family; both are independent of r."""
    if sol.family != "exponential":
        raise ValueError("exp_factors needs an exponential pair of terms")
    p, pb, z, zb, _ = point
    ta, tb = sol.terms
    th, ph = ta.theta, tb.theta
    arg_a = math.cos(th) * (p + pb) + 1j * math.sin(th) * (pb - p)
    arg_b = math.cos(ph) * (p + pb) + 1j * math.sin(ph) * (pb - p)
    G = jets.exp(math.cos(2 * th) * (z + zb) + 1j * math.sin(2 * th) * (zb - z)) * (
        ta.A * jets.cos(arg_a) + ta.C * jets.sin(arg_a)
    )
    H = jets.exp(-math.cos(2 * ph) * (z + zb) + 1j * math.sin(2 * ph) * (z - zb)) * (
        tb.A * jets.cos(arg_b) - tb.C * jets.sin(arg_b)
    )
    return G, H


def exp_w(sol: SpectralSolution, point):
    """Exponential family ``w = exp(-r) G + exp(r) H``; returns ``(w, G, H)``."""
    G, H = exp_factors(sol, point)
    r = point[4]
    return jets.exp(-r) * G + jets.exp(r) * H, G, H


def superpose(weighted: Sequence[tuple[complex, Callable]], point):
    """Weighted sum of solution fields evaluated at ``point``."""
    if not weighted:
        raise ValueError("superpose needs at least one solution")
    return sum(weight * field(point) for weight, field in weighted)


def quadrature(
    amplitude: Callable[[float], tuple[float, float]],
    alpha_range: tuple[float, float],
    nodes: int = 10,
    profile: str = "power",
    power: int = 3,
) -> SpectralSolution:
    """Gauss-Legendre realisation of a continuous spectral integral.

    ``amplitude(alpha)`` returns the real pair ``(A, C)`` at each node.
    """
    x, wts = np.polynomial.legendre.leggauss(nodes)
    lo, hi = alpha_range
    half = 0.5 * (hi - lo)
    terms = []
    for xk, wk in zip(x, wts):
        alpha = float(lo + half * (xk + 1))
        A, C = amplitude(alpha)
        terms.append(SpectralTerm(alpha, wk * half * A, wk * half * C, profile, power))
    return SpectralSolution(tuple(terms))


def point_jets(p, z, r, order: int, coords: str = "wirtinger", num_vars: int = 5):
    """Jets ``(p, pb, z, zb, r)`` expanded at a (batch of) real-slice point(s).

    ``coords="wirtinger"`` makes p, pb, z, zb, r the variables 0..4.
    ``coords="real"`` uses (Re p, Im p, Re z, Im z, r) instead, so that
    ``p = x0 + i x1`` and ``pb = x0 - i x1``.  With ``num_vars=4`` the last
    coordinate is held constant.
    """
    p = np.asarray(p, dtype=complex)
    z = np.asarray(z, dtype=complex)
    r = np.asarray(r, dtype=complex)
    if coords == "wirtinger":
        vals = (p, p.conj(), z, z.conj(), r)
        out = [
            jets.variable(i, v, num_vars, order) if i < num_vars else jets.constant(v, num_vars, order)
            for i, v in enumerate(vals)
        ]
        return tuple(out)
    if coords == "real":
        x = [jets.variable(i, v, num_vars, order) for i, v in enumerate((p.real, p.imag, z.real, z.imag))]
        rr = jets.variable(4, r, num_vars, order) if num_vars == 5 else jets.constant(r, num_vars, order)
        # values carry the full complex point; variables only carry offsets
        pj = x[0] + 1j * x[1]
        zj = x[2] + 1j * x[3]
        return (pj, pj - 2j * x[1], zj, zj - 2j * x[3], rr)
    raise ValueError(f"unknown coordinate mode {coords!r}")
