"""
Residual evaluators for the equations this package certifies.

All evaluators take jets whose variables are Wirtinger coordinates:

* ``u`` jets: (z1, z1b, z2, z2b)
* ``w`` jets: (p, pb, z, zb, r)
* ``v`` jets: (p, pb, z, zb, rho)

Each evaluator returns the residual together with the list of the equation's
individual terms, which sets the local scale used for relative residuals
(``max |term|`` floored at 1).

The eight-variable extended system and the reduced u-space system are not
evaluated directly; their Legendre images (the six linear equations and the
transformed Monge-Ampere equation) are.  The intermediate bilinear forms that
collapse to the linear equations under the Legendre nondegeneracy condition
are not evaluated separately either.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .jets import Jet, partial

LINEAR_EQUATIONS = (
    "lin8",        # w_ppb + w_rr
    "linhom_1",    # w_pp - lam w_zr
    "linhom_2",    # w_pr + lam w_pbz
    "linhom_1c",   # w_pbpb - conj(lam) w_zbr
    "linhom_2c",   # w_pbr + conj(lam) w_pzb
    "lap_pz",      # w_ppb + w_zzb
)


def d2(jet: Jet, i: int, j: int) -> np.ndarray:
    m = [0] * jet.num_vars
    m[i] += 1
    m[j] += 1
    return partial(jet, m)


def relative(residual, terms) -> np.ndarray:
    scale = np.maximum(np.max([np.abs(t) for t in terms], axis=0), 1.0)
    return np.abs(residual) / scale


def cma_terms(u: Jet, epsilon: int = 1):
    a, b = d2(u, 0, 1) * d2(u, 2, 3), d2(u, 0, 3) * d2(u, 2, 1)
    return a - b - epsilon, [a, b, np.full_like(a, epsilon)]


def cma_residual(u: Jet, epsilon: int = 1) -> np.ndarray:
    """u_{1 1b} u_{2 2b} - u_{1 2b} u_{2 1b} - epsilon (real on the real slice)."""
    return cma_terms(u, epsilon)[0].real


def symcond_residual(u: Jet, phi: Jet) -> np.ndarray:
    """Linearised Monge-Ampere operator applied to a candidate characteristic."""
    return (
        d2(u, 0, 1) * d2(phi, 2, 3)
        + d2(u, 2, 3) * d2(phi, 0, 1)
        - d2(u, 0, 3) * d2(phi, 2, 1)
        - d2(u, 2, 1) * d2(phi, 0, 3)
    )


def linear_system_terms(w: Jet, lam: complex = 1.0):
    """``{equation_id: (residual, terms)}`` for the six linear equations."""
    P, PB, Z, ZB, R = range(5)
    lc = np.conj(lam)
    pairs = {
        "lin8": (d2(w, P, PB), d2(w, R, R)),
        "linhom_1": (d2(w, P, P), -lam * d2(w, Z, R)),
        "linhom_2": (d2(w, P, R), lam * d2(w, PB, Z)),
        "linhom_1c": (d2(w, PB, PB), -lc * d2(w, ZB, R)),
        "linhom_2c": (d2(w, PB, R), lc * d2(w, P, ZB)),
        "lap_pz": (d2(w, P, PB), d2(w, Z, ZB)),
    }
    return {k: (a + b, [a, b]) for k, (a, b) in pairs.items()}


def linear_system_residuals(w: Jet, lam: complex = 1.0) -> dict:
    """The six residuals, keyed by :data:`LINEAR_EQUATIONS`."""
    return {k: res for k, (res, _) in linear_system_terms(w, lam).items()}


def veq_terms(v: Jet):
    P, PB, Z, ZB = range(4)
    t = [
        d2(v, P, ZB) * d2(v, PB, Z),
        -d2(v, P, PB) * d2(v, Z, ZB),
        d2(v, P, P) * d2(v, PB, PB),
        -d2(v, P, PB) ** 2,
    ]
    return t[0] + t[1] + t[2] + t[3], t


def veq_residual(v: Jet) -> np.ndarray:
    """Legendre-transformed Monge-Ampere operator (real on the real slice)."""
    return veq_terms(v)[0].real


@dataclass
class ResidualReport:
    """Worst-case statistics of one equation over a sample set."""

    equation_id: str
    samples: int
    max_abs: float
    max_rel: float
    tolerance: float
    verdict: str
    worst_point: list = field(default_factory=list)

    @classmethod
    def from_samples(cls, equation_id, residual, terms, tolerance, points=None):
        """Build a report from batched residuals.

        ``points`` is an optional ``(n, d)`` array of coordinates used to
        record where the worst relative residual occurred.
        """
        residual = np.atleast_1d(residual)
        rel = relative(residual, terms).ravel()
        n = rel.size
        if n == 0:
            return cls(equation_id, 0, 0.0, 0.0, tolerance, "fail", [])
        worst = int(np.argmax(rel))
        max_rel = float(rel[worst])
        wp = [] if points is None else [float(x) for x in np.asarray(points)[worst]]
        return cls(
            equation_id,
            n,
            float(np.max(np.abs(residual))),
            max_rel,
            float(tolerance),
            "pass" if max_rel <= tolerance else "fail",
            wp,
        )

    def merge(self, other: "ResidualReport") -> "ResidualReport":
        """Combine reports of the same equation over disjoint sample sets."""
        if other.equation_id != self.equation_id:
            raise ValueError("cannot merge reports of different equations")
        worst = self if self.max_rel >= other.max_rel else other
        tol = min(self.tolerance, other.tolerance)
        max_rel = worst.max_rel
        return ResidualReport(
            self.equation_id,
            self.samples + other.samples,
            max(self.max_abs, other.max_abs),
            max_rel,
            tol,
            "pass" if max_rel <= tol else "fail",
            list(worst.worst_point),
        )

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "ResidualReport":
        return cls(**json.loads(line))
