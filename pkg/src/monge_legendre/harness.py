"""
Verification sweeps and solution tables.

A sweep samples the box of ``(Re p, Im p, Re z, Im z, rho)`` uniformly with a
counter-based generator (Philox), evaluates the requested checks on every
branch, and emits one JSON record per (check, branch), sorted by check then
branch.  Identical configuration and seed give byte-identical output.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import geometry, jets, legendre, residuals, spectral
from .spectral import SpectralSolution, parse_decimal

COORDINATES = ("re_p", "im_p", "re_z", "im_z", "rho")
CHECKS = (
    "legendre-roundtrip",
    "linear",
    "metric",
    "noninvariance",
    "polynom",
    "ricci",
    "signature",
    "veq",
)
FAMILIES = ("cubic", "exponential", "superposition")
DEFAULT_TOLERANCES = {
    "linear": 1e-9,
    "legendre-roundtrip": 1e-9,
    "v_rho": 1e-10,
    "veq": 1e-8,
    "polynom": 1e-8,
    "homogeneity": 1e-8,
    "metric": 1e-8,
    "ricci": 1e-6,
    "riemann_min": 1e-8,
    "signature": 0.0,
    "noninvariance": 1e-8,
}

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NO_SAMPLES = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class SweepConfig:
    family: str = "cubic"
    params: dict = field(
        default_factory=lambda: {
            "A": "1", "B": "-0.5", "C": "0.7", "D": "1.3", "alpha": "0.5", "beta": "-1.5",
        }
    )
    lam: str = "1"
    perturb_p4: str = "0"
    weights: dict = field(default_factory=lambda: {"cubic": "1", "exponential": "1"})
    domain: dict = field(default_factory=lambda: {c: (-2.0, 2.0) for c in COORDINATES})
    samples: int = 1000
    seed: int = 0
    branch: str = "both"
    checks: tuple = CHECKS
    tolerances: dict = field(default_factory=dict)
    cond_max: float = geometry.COND_MAX

    def tolerance(self, name: str) -> float:
        return self.tolerances.get(name, DEFAULT_TOLERANCES[name])

    def branches(self) -> list:
        if self.family == "superposition":
            return ["newton"]
        return {"both": ["+", "-"], "+": ["+"], "-": ["-"]}[self.branch]

    def solutions(self):
        """``[(weight, SpectralSolution)]`` making up the configured w field."""
        vals = {k: parse_decimal(v) for k, v in self.params.items()}
        args = [vals[k] for k in ("A", "B", "C", "D", "alpha", "beta")]
        eps = parse_decimal(self.perturb_p4)
        cubic = SpectralSolution.cubic(*args)
        expo = SpectralSolution.exponential(*args)
        if self.family == "cubic":
            return [(1.0, cubic.with_perturbation(eps))]
        if self.family == "exponential":
            return [(1.0, expo.with_perturbation(eps))]
        return [
            (parse_decimal(self.weights["cubic"]), cubic.with_perturbation(eps)),
            (parse_decimal(self.weights["exponential"]), expo),
        ]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["domain"] = {k: list(v) for k, v in self.domain.items()}
        d["checks"] = list(self.checks)
        return d


def parse_key_values(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def build_config(values: dict) -> SweepConfig:
    """Validate raw string settings into a :class:`SweepConfig`."""
    cfg = SweepConfig()
    try:
        for key, value in values.items():
            if key == "family":
                if value not in FAMILIES:
                    raise ConfigError(f"unknown family {value!r}")
                cfg.family = value
            elif key in ("A", "B", "C", "D", "alpha", "beta"):
                parse_decimal(value)
                cfg.params[key] = value
            elif key == "lambda":
                if not math.isclose(abs(complex(value)), 1.0, abs_tol=1e-12):
                    raise ConfigError("lambda must have unit modulus")
                cfg.lam = value
            elif key == "perturb_p4":
                parse_decimal(value)
                cfg.perturb_p4 = value
            elif key in ("weight_cubic", "weight_exponential"):
                parse_decimal(value)
                cfg.weights[key.split("_", 1)[1]] = value
            elif key in COORDINATES:
                lo, hi = (parse_decimal(s) for s in value.split(","))
                if not lo < hi:
                    raise ConfigError(f"empty interval for {key}: {value!r}")
                cfg.domain[key] = (lo, hi)
            elif key == "samples":
                cfg.samples = int(value)
                if cfg.samples < 1:
                    raise ConfigError("samples must be >= 1")
            elif key == "seed":
                cfg.seed = int(value)
                if not 0 <= cfg.seed < 2**64:
                    raise ConfigError("seed must fit in 64 bits")
            elif key == "branch":
                if value not in ("+", "-", "both"):
                    raise ConfigError(f"branch must be +, - or both, got {value!r}")
                cfg.branch = value
            elif key == "checks":
                names = tuple(sorted({c.strip() for c in value.split(",") if c.strip()}))
                bad = [c for c in names if c not in CHECKS]
                if bad or not names:
                    raise ConfigError(f"unknown checks {bad}")
                cfg.checks = names
            elif key.startswith("tol."):
                name = key[4:]
                if name not in DEFAULT_TOLERANCES:
                    raise ConfigError(f"unknown tolerance {name!r}")
                cfg.tolerances[name] = float(parse_decimal(value))
            elif key == "cond_max":
                cfg.cond_max = float(parse_decimal(value))
            else:
                raise ConfigError(f"unknown configuration key {key!r}")
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.family == "superposition" and cfg.branch != "both":
        raise ConfigError("superposition uses the Newton branch only")
    return cfg


def sample_box(cfg: SweepConfig) -> np.ndarray:
    """``(samples, 5)`` uniform draws over the configured box."""
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    u = rng.random((cfg.samples, len(COORDINATES)))
    lo = np.array([cfg.domain[c][0] for c in COORDINATES])
    hi = np.array([cfg.domain[c][1] for c in COORDINATES])
    return lo + (hi - lo) * u


# -- records ---------------------------------------------------------------------


def _record(cfg, check, branch, n_valid, n_total, metrics, worst_point=None, extra=None):
    """Assemble one report record; verdict passes iff every metric is in tolerance."""
    if n_valid == 0:
        verdict = "no-samples"
    else:
        verdict = "pass" if all(m["value"] <= m["tolerance"] for m in metrics.values()) else "fail"
    primary = next(iter(metrics.values())) if metrics else {"value": 0.0, "tolerance": 0.0}
    rec = {
        "check": check,
        "family": cfg.family,
        "branch": branch,
        "seed": cfg.seed,
        "samples_valid": int(n_valid),
        "samples_total": int(n_total),
        "valid_fraction": n_valid / n_total if n_total else 0.0,
        "max_rel": float(primary["value"]),
        "tolerance": float(primary["tolerance"]),
        "metrics": {k: {"value": float(m["value"]), "tolerance": float(m["tolerance"])} for k, m in metrics.items()},
        "verdict": verdict,
        "worst_point": [float(x) for x in worst_point] if worst_point is not None else [],
    }
    if extra:
        rec.update(extra)
    return rec


def _metric(value, tol):
    return {"value": float(value), "tolerance": float(tol)}


def _worst(rel, pts):
    if rel.size == 0:
        return None
    return pts[int(np.argmax(rel))]


class _Sweep:
    """State shared by the checks of one sweep."""

    def __init__(self, cfg: SweepConfig):
        self.cfg = cfg
        self.pts = sample_box(cfg)
        self.p = self.pts[:, 0] + 1j * self.pts[:, 1]
        self.z = self.pts[:, 2] + 1j * self.pts[:, 3]
        self.rho = self.pts[:, 4]
        self.weighted = cfg.solutions()
        self._valid = {}

    def w_field(self, point):
        return spectral.superpose(self.weighted, point)

    @property
    def sol(self) -> SpectralSolution:
        return self.weighted[0][1]

    # -- Legendre step per branch ------------------------------------------------

    def valid(self, branch):
        """(mask, r) of points where the branch exists."""
        if branch in self._valid:
            return self._valid[branch]
        if branch == "newton":
            res = legendre.implicit_legendre(
                self.w_field, (self.p, self.p.conj(), self.z, self.z.conj(), self.rho),
                np.zeros(self.rho.shape), strict=False,
            )
            mask, r = res.converged & np.isfinite(res.r), res.r
        else:
            lp = legendre.legendre_points(self.sol, self.p, self.z, self.rho, branch)
            mask, r = lp.valid, lp.r
        self._valid[branch] = (mask, r)
        return mask, r

    def v_field(self, branch):
        if branch == "newton":
            mask, r = self.valid(branch)

            def field(pt, _seed=r[mask]):
                return legendre.implicit_legendre(self.w_field, pt, _seed).v_jet

            return field
        return legendre.closed_form_v(self.sol, branch)

    def v_jet(self, branch, order):
        mask, _ = self.valid(branch)
        pt = spectral.point_jets(self.p[mask], self.z[mask], self.rho[mask], order)
        return self.v_field(branch)(pt)

    def nondegenerate(self, branch):
        """Valid points whose transformed metric is well conditioned."""
        mask, _ = self.valid(branch)
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            return idx, None
        v = self.v_jet(branch, 2)
        d = {k: jets.value(x) for k, x in geometry.second_derivatives(v).items()}
        delta = d["pp"] * d["pbpb"] - d["ppb"] ** 2
        scale = np.maximum(np.abs(d["pp"]), np.abs(d["ppb"]))
        ok = (np.abs(delta) > 1e-10 * scale**2) & (np.abs(d["ppb"]) > 1e-10 * scale)
        sample = geometry.transformed_metric(v.select(ok))
        good = geometry.well_conditioned(sample.g_real, self.cfg.cond_max)
        return idx[ok][good], sample


def check_linear(sw: _Sweep):
    cfg = sw.cfg
    pt = spectral.point_jets(sw.p, sw.z, sw.rho, 2)
    w = sw.w_field(pt)
    worst_eq, worst_rel, worst_abs, worst_idx = None, -1.0, 0.0, 0
    for eq, (res, terms) in residuals.linear_system_terms(w, complex(cfg.lam)).items():
        rel = residuals.relative(res, terms)
        i = int(np.argmax(rel))
        if rel[i] > worst_rel:
            worst_eq, worst_rel, worst_abs, worst_idx = eq, float(rel[i]), float(np.abs(res[i])), i
    metrics = {"linear": _metric(worst_rel, cfg.tolerance("linear"))}
    extra = {"equation_id": worst_eq, "max_abs": worst_abs}
    return [_record(cfg, "linear", "none", len(sw.p), len(sw.p), metrics, sw.pts[worst_idx], extra)]


def check_roundtrip(sw: _Sweep, branch):
    cfg = sw.cfg
    mask, r = sw.valid(branch)
    n = int(mask.sum())
    if n == 0:
        return _record(cfg, "legendre-roundtrip", branch, 0, mask.size, {})
    pts = sw.pts[mask]
    v = sw.v_jet(branch, 1)
    rr = r[mask]
    w = sw.w_field(spectral.point_jets(sw.p[mask], sw.z[mask], rr, 0)).value
    vv = np.real(v.value)
    ref = np.real(w) + sw.rho[mask] * rr
    scale = np.maximum.reduce([np.abs(vv), np.abs(np.real(w)), np.abs(sw.rho[mask] * rr), np.ones(n)])
    rel_v = np.abs(vv - ref) / scale
    v_rho = np.real(jets.partial(v, (0, 0, 0, 0, 1)))
    rel_r = np.abs(v_rho - rr) / np.maximum(np.abs(rr), 1.0)
    metrics = {
        "legendre-roundtrip": _metric(rel_v.max(), cfg.tolerance("legendre-roundtrip")),
        "v_rho": _metric(rel_r.max(), cfg.tolerance("v_rho")),
    }
    if branch != "newton":
        imp = legendre.implicit_legendre(
            sw.w_field, (sw.p[mask], sw.p[mask].conj(), sw.z[mask], sw.z[mask].conj(), sw.rho[mask]),
            rr, strict=False,
        )
        rel_i = np.where(imp.converged, np.abs(imp.v - vv) / scale, np.inf)
        metrics["implicit_agreement"] = _metric(rel_i.max(), cfg.tolerance("legendre-roundtrip"))
    return _record(cfg, "legendre-roundtrip", branch, n, mask.size, metrics, _worst(rel_v, pts))


def check_veq(sw: _Sweep, branch):
    cfg = sw.cfg
    mask, _ = sw.valid(branch)
    n = int(mask.sum())
    if n == 0:
        return _record(cfg, "veq", branch, 0, mask.size, {})
    res, terms = residuals.veq_terms(sw.v_jet(branch, 2))
    rel = residuals.relative(res, terms)
    return _record(
        cfg, "veq", branch, n, mask.size, {"veq": _metric(rel.max(), cfg.tolerance("veq"))},
        _worst(rel, sw.pts[mask]),
    )


def check_polynom(sw: _Sweep, branch):
    cfg = sw.cfg
    if sw.sol.family != "cubic" or cfg.family != "cubic":
        return _record(cfg, "polynom", branch, 0, 0, {}, extra={"verdict": "skip"})
    mask, _ = sw.valid(branch)
    n = int(mask.sum())
    if n == 0:
        return _record(cfg, "polynom", branch, 0, mask.size, {})
    p, z, rho = sw.p[mask], sw.z[mask], sw.rho[mask]
    pt4 = (p, p.conj(), z, z.conj())
    v, _ = legendre.cubic_v(sw.sol, pt4, rho, branch)
    res, terms = legendre.polynom_terms(sw.sol, pt4, rho, v)
    rel = residuals.relative(res, terms)
    s = 2.0
    v2, _ = legendre.cubic_v(sw.sol, tuple(s * x for x in pt4), s * s * rho, branch)
    hom = np.abs(v2 - s**3 * v) / np.maximum(np.abs(s**3 * v), 1.0)
    metrics = {
        "polynom": _metric(rel.max(), cfg.tolerance("polynom")),
        "homogeneity": _metric(hom.max(), cfg.tolerance("homogeneity")),
    }
    return _record(cfg, "polynom", branch, n, mask.size, metrics, _worst(rel, sw.pts[mask]))


def check_metric(sw: _Sweep, branch):
    cfg = sw.cfg
    mask, _ = sw.valid(branch)
    idx, _ = sw.nondegenerate(branch)
    if idx.size == 0:
        return _record(cfg, "metric", branch, 0, mask.size, {})
    sub = idx_mask(mask.size, idx)
    v = _v_at(sw, branch, sub, 2)
    m = geometry.transformed_metric(v)
    pull = geometry.pulled_back_kahler(v)
    gscale = np.abs(m.g_real).max(axis=(-2, -1))
    rel_pull = np.abs(pull - 2 * m.g_real).max(axis=(-2, -1)) / np.maximum(2 * gscale, 1.0)
    cma = np.abs(legendre.cma_from_v(v))
    tol = cfg.tolerance("metric")
    metrics = {
        "pullback_agreement": _metric(rel_pull.max(), tol),
        "asymmetry": _metric((m.asymmetry / np.maximum(gscale, 1.0)).max(), 1e-12),
        "imag_residue": _metric(m.imag_residue.max(), 1e-10),
        "delta_plus_bound": _metric(np.maximum(np.abs(m.Delta) - m.Delta_plus, 0).max(), 0.0),
        "reconstructed_cma": _metric(cma.max(), tol),
    }
    return _record(cfg, "metric", branch, idx.size, mask.size, metrics, _worst(rel_pull, sw.pts[sub]))


def idx_mask(n, idx):
    m = np.zeros(n, dtype=bool)
    m[idx] = True
    return m


def _v_at(sw, branch, sub, order):
    """Jet of v on ``branch`` at the points selected by ``sub``."""
    pt = spectral.point_jets(sw.p[sub], sw.z[sub], sw.rho[sub], order)
    if branch != "newton":
        return sw.v_field(branch)(pt)
    _, r = sw.valid("newton")
    return legendre.implicit_legendre(sw.w_field, pt, r[sub]).v_jet


def _metric_field(sw, branch, sub):
    if branch != "newton":
        return geometry.TransformedMetricField(sw.v_field(branch), sw.rho[sub])
    _, r = sw.valid("newton")
    seed = r[sub]
    field = lambda pt: legendre.implicit_legendre(sw.w_field, pt, seed).v_jet  # noqa: E731
    return geometry.TransformedMetricField(field, sw.rho[sub])


def check_ricci(sw: _Sweep, branch):
    cfg = sw.cfg
    mask, _ = sw.valid(branch)
    idx, _ = sw.nondegenerate(branch)
    if idx.size == 0:
        return _record(cfg, "ricci", branch, 0, mask.size, {})
    sub = idx_mask(mask.size, idx)
    x = sw.pts[sub][:, :4]
    curv = geometry.curvature(_metric_field(sw, branch, sub), x)
    ratio = curv.ricci_norm / np.maximum(1.0, curv.riemann_norm)
    metrics = {
        "ricci": _metric(ratio.max(), cfg.tolerance("ricci")),
        # inverted so that "value <= tolerance" reads as "curvature is nontrivial"
        "riemann_min_inverse": _metric(1.0 / max(curv.riemann_norm.min(), 1e-300), 1.0 / cfg.tolerance("riemann_min")),
    }
    extra = {"riemann_min": float(curv.riemann_norm.min()), "riemann_max": float(curv.riemann_norm.max())}
    return _record(cfg, "ricci", branch, idx.size, mask.size, metrics, _worst(ratio, sw.pts[sub]), extra)


def check_signature(sw: _Sweep, branch):
    cfg = sw.cfg
    mask, _ = sw.valid(branch)
    idx, _ = sw.nondegenerate(branch)
    if idx.size == 0:
        return _record(cfg, "signature", branch, 0, mask.size, {})
    sub = idx_mask(mask.size, idx)
    v = _v_at(sw, branch, sub, 2)
    sig = geometry.signature(geometry.transformed_metric(v).g_real)
    nondef = ~sig.definite
    counts = {
        "positive_definite": int((sig.sign == 1).sum()),
        "negative_definite": int((sig.sign == -1).sum()),
        "indefinite": int(nondef.sum()),
    }
    metrics = {"non_definite_fraction": _metric(nondef.mean(), cfg.tolerance("signature"))}
    worst = sw.pts[sub][int(np.argmax(nondef))] if nondef.any() else None
    return _record(cfg, "signature", branch, idx.size, mask.size, metrics, worst, {"signature_counts": counts})


def check_noninvariance(sw: _Sweep, branch):
    cfg = sw.cfg
    mask, _ = sw.valid(branch)
    idx, _ = sw.nondegenerate(branch)
    if idx.size < 10:
        return _record(cfg, "noninvariance", branch, 0, mask.size, {})
    sub = idx_mask(mask.size, idx)
    if branch == "newton":
        _, r = sw.valid("newton")
        seed = r[sub]
        vf = lambda pt: legendre.implicit_legendre(sw.w_field, pt, seed).v_jet  # noqa: E731
    else:
        vf = sw.v_field(branch)
    rep = geometry.noninvariance_indicator(vf, sw.p[sub], sw.z[sub], sw.rho[sub], cfg.tolerance("noninvariance"))
    thr = cfg.tolerance("noninvariance")
    metrics = {
        "min_direction_gradient_inverse": _metric(1.0 / max(rep.gradient_max.min(), 1e-300), 1.0 / thr),
        "riemann_min_inverse": _metric(1.0 / max(rep.riemann_min, 1e-300), 1.0 / thr),
    }
    extra = {
        "gradient_max": [float(g) for g in rep.gradient_max],
        "riemann_min": rep.riemann_min,
        "noninvariant": rep.noninvariant,
    }
    return _record(cfg, "noninvariance", branch, idx.size, mask.size, metrics, None, extra)


_BRANCHED = {
    "legendre-roundtrip": check_roundtrip,
    "veq": check_veq,
    "polynom": check_polynom,
    "metric": check_metric,
    "ricci": check_ricci,
    "signature": check_signature,
    "noninvariance": check_noninvariance,
}


def run_sweep(cfg: SweepConfig) -> tuple[list[dict], int]:
    """Run every configured check; return (sorted records, exit status)."""
    sw = _Sweep(cfg)
    records = []
    for check in cfg.checks:
        if check == "linear":
            records.extend(check_linear(sw))
            continue
        for branch in cfg.branches():
            records.append(_BRANCHED[check](sw, branch))
    records.sort(key=lambda r: (r["check"], r["branch"]))
    verdicts = [r["verdict"] for r in records]
    if "fail" in verdicts:
        status = EXIT_FAIL
    elif "no-samples" in verdicts:
        status = EXIT_NO_SAMPLES
    else:
        status = EXIT_PASS
    return records, status


def format_records(records) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)


def summarize(records) -> str:
    lines = []
    for r in records:
        lines.append(
            f"{r['verdict']:>10}  {r['check']:<20} branch={r['branch']:<6} "
            f"valid={r['samples_valid']}/{r['samples_total']}  max_rel={r['max_rel']:.3e} "
            f"(tol {r['tolerance']:.1e})"
        )
    return "\n".join(lines) + "\n"


# -- solution table -----------------------------------------------------------------


@dataclass
class GridSpec:
    axes: dict  # coordinate -> (lo, hi, count), exactly two entries
    fixed: dict  # remaining coordinates -> value

    @classmethod
    def parse(cls, grid: list[str], fixed: list[str]) -> "GridSpec":
        axes = {}
        for g in grid:
            try:
                name, rng = g.split("=", 1)
                lo, hi, cnt = rng.split(":")
                axes[name.strip()] = (parse_decimal(lo), parse_decimal(hi), int(cnt))
            except ValueError as exc:
                raise ConfigError(f"bad grid spec {g!r} (want name=lo:hi:count)") from exc
        if len(axes) != 2 or any(a not in COORDINATES for a in axes):
            raise ConfigError("a table needs exactly two grid axes among " + ", ".join(COORDINATES))
        if any(c < 1 for _, _, c in axes.values()):
            raise ConfigError("grid counts must be >= 1")
        vals = {c: (0.5 if c == "rho" else 0.0) for c in COORDINATES if c not in axes}
        for f in fixed:
            try:
                name, val = f.split("=", 1)
            except ValueError as exc:
                raise ConfigError(f"bad fixed value {f!r}") from exc
            name = name.strip()
            if name not in vals:
                raise ConfigError(f"{name!r} is not a fixed coordinate")
            vals[name] = parse_decimal(val)
        return cls(axes, vals)

    def points(self) -> np.ndarray:
        (a, (alo, ahi, na)), (b, (blo, bhi, nb)) = self.axes.items()
        ga = np.linspace(alo, ahi, na)
        gb = np.linspace(blo, bhi, nb)
        rows = []
        for x in ga:
            for y in gb:
                d = dict(self.fixed)
                d[a], d[b] = x, y
                rows.append([d[c] for c in COORDINATES])
        return np.array(rows)


def _fmt(x) -> str:
    return repr(float(x))


def emit_solution_table(cfg: SweepConfig, grid: GridSpec) -> str:
    """CSV text: coordinates, branch, r, v, discriminant, validity flag.

    ``discriminant`` is ``Delta = l^2 - k m`` for the cubic family and
    ``rho^2 + 4 G H`` for the exponential family.  Invalid rows leave r and v
    empty.
    """
    if cfg.family == "superposition":
        raise ConfigError("tables are available for the cubic and exponential families")
    sol = cfg.solutions()[0][1]
    pts = grid.points()
    p = pts[:, 0] + 1j * pts[:, 1]
    z = pts[:, 2] + 1j * pts[:, 3]
    rho = pts[:, 4]
    pt4 = (p, p.conj(), z, z.conj())
    if sol.family == "cubic":
        disc = np.real(legendre.cubic_klm(sol, pt4, rho).delta)
    else:
        G, H = spectral.exp_factors(sol, pt4 + (0.0,))
        disc = np.real(rho**2 + 4 * G * H)
    header = [
        f"# family={cfg.family} branch={cfg.branch}",
        "# params " + " ".join(f"{k}={v}" for k, v in sorted(cfg.params.items())),
        "# grid " + " ".join(f"{k}={lo!r}:{hi!r}:{n}" for k, (lo, hi, n) in grid.axes.items()),
        "# fixed " + " ".join(f"{k}={v!r}" for k, v in grid.fixed.items()),
        ",".join(COORDINATES + ("branch", "r", "v", "discriminant", "valid")),
    ]
    lines = list(header)
    branches = ["+", "-"] if cfg.branch == "both" else [cfg.branch]
    for branch in branches:
        lp = legendre.legendre_points(sol, p, z, rho, branch)
        v = np.full(p.shape, np.nan)
        if lp.valid.any():
            m = lp.valid
            v[m] = np.real(legendre.closed_form_v(sol, branch)((p[m], p[m].conj(), z[m], z[m].conj(), rho[m])))
        for i in range(len(p)):
            ok = bool(lp.valid[i])
            cells = [_fmt(x) for x in pts[i]] + [
                branch,
                _fmt(lp.r[i]) if ok else "",
                _fmt(v[i]) if ok else "",
                _fmt(disc[i]),
                "1" if ok else "0",
            ]
            lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
