"""Independent numerical checks of the certified inequalities.

Each check returns a :class:`VerificationReport` with ``margin = lhs - rhs``
and passes when ``margin >= -tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .field import FieldSpec, GaugePotential, SingularPointError, gauge_for, to_cartesian
from .testfunctions import (GaussianBump, LogLogPlateau, LogRadial, RadialGaussian, RadialMode, SmoothPlateau,
                            TestFunction, _GAUSS_CUT, _gl_composite)
from .weights import W2Profile, Weight, WeightCertificate, k1_constant, theorem3_constants

ORACLE_TOL = 1e-8
FORM_RTOL = 1e-6
POINCARE_RTOL = 1e-6


@dataclass
class VerificationReport:
    name: str
    lhs: float
    rhs: float
    margin: float
    tol: float
    passed: bool
    meta: dict = field(default_factory=dict)

    @classmethod
    def build(cls, name, lhs, rhs, tol, meta=None):
        lhs, rhs, tol = float(lhs), float(rhs), float(tol)
        margin = lhs - rhs
        return cls(name, lhs, rhs, margin, tol, bool(margin >= -tol), dict(meta or {}))

    def to_dict(self):
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin,
                "tol": self.tol, "pass": self.passed, "meta": self.meta}

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: lhs={self.lhs:.10g} rhs={self.rhs:.10g} "
                f"margin={self.margin:.3e} tol={self.tol:.1e}")


# ---------------------------------------------------------------- angular oracle


def oracle_grid(n):
    """Open uniform theta grid with half-cell offset (the oracle's sample points)."""
    return (np.arange(n) + 0.5) * np.pi / n


def angular_oracle_min_eigenvalue(V, n=None):
    """Smallest eigenvalue of the weighted Neumann problem with potential V.

    Discretizes int (|v'|^2 + V |v|^2) sin / int |v|^2 sin on the cell-centred
    grid ``oracle_grid(n)``: flux differences use sin at the cell faces, the
    mass uses sin at the centres.  Natural boundary conditions come for free
    because the outer faces sit at 0 and pi where sin vanishes.

    Parameters
    ----------
    V : array_like or callable
        Potential sampled at ``oracle_grid(n)``, or a function of theta.
    n : int, optional
        Grid size; inferred from ``V`` when it is an array.
    """
    if callable(V):
        n = 2000 if n is None else int(n)
        if n < 100:
            raise ValueError("oracle grid needs n >= 100")
        v = np.asarray(V(oracle_grid(n)), dtype=float)
    else:
        v = np.asarray(V, dtype=float)
        if n is not None and int(n) != v.size:
            raise ValueError("len(V) must equal n")
        n = v.size
        if n < 100:
            raise ValueError("oracle grid needs n >= 100")
    if v.shape != (n,) or not np.all(np.isfinite(v)):
        raise ValueError("V must be a finite 1-d sample")
    h = np.pi / n
    s_mid = np.sin(oracle_grid(n))
    s_face = np.sin(np.arange(1, n) * h)
    # K = D^T diag(s_face / h) D + diag(V s_mid h), M = diag(s_mid h)
    k_face = s_face / h
    diag = v * s_mid * h
    diag[:-1] += k_face
    diag[1:] += k_face
    mass = s_mid * h
    d = diag / mass
    e = -k_face / np.sqrt(mass[:-1] * mass[1:])
    return float(eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, 0))[0])


def oracle_dominance(V, n=2000):
    """(oracle eigenvalue, witness, report) for the witness extracted from V on the oracle grid."""
    from .weights import angular_witness_search

    t = oracle_grid(n)
    v = np.asarray(V(t) if callable(V) else V, dtype=float)
    mu = angular_oracle_min_eigenvalue(v)
    wit = angular_witness_search(v, t)
    lam = 0.0 if wit is None else wit.lambda_value
    meta = {"n": n, "witness": None if wit is None else wit.to_dict()}
    return mu, wit, VerificationReport.build("oracle_dominance", mu, lam, ORACLE_TOL, meta)


# ---------------------------------------------------------------- Poincare inequality


def _theta_quadrature(n=512, split=None):
    pts = [0.0, math.pi] if split is None else [0.0, float(split), math.pi]
    nodes, weights = [], []
    for a, b in zip(pts[:-1], pts[1:]):
        x, w = _gl_composite(a, b, n // (len(pts) - 1))
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def poincare_margin(f, c, n=512):
    """Check int |f|^2 sin <= k1(c) int |f'|^2 sin for f with f(c) = 0.

    ``f`` has ``value`` and ``derivative`` methods on (0, pi), or is None for
    the zero function.
    """
    c = float(c)
    k1 = k1_constant(c)
    if f is None:
        return VerificationReport.build("poincare", 0.0, 0.0, 0.0, {"c": c, "k1": k1})
    fc = float(np.abs(f.value(np.array(c))))
    if fc > 1e-10:
        raise ValueError(f"f(c) = {fc:.3g} does not vanish")
    t, w = _theta_quadrature(n, split=c)
    s = np.sin(t)
    rhs = float(np.sum(w * s * np.abs(f.value(t)) ** 2))
    lhs = k1 * float(np.sum(w * s * np.abs(f.derivative(t)) ** 2))
    return VerificationReport.build("poincare", lhs, rhs, POINCARE_RTOL * lhs,
                                    {"c": c, "k1": k1, "ratio": rhs / lhs if lhs > 0 else 0.0})


# ---------------------------------------------------------------- radial 1-d check


def _w2_callable(w2):
    if callable(w2):
        return w2
    if isinstance(w2, W2Profile):
        r, vals = w2.r_grid, w2.values
    else:
        r, vals = (np.asarray(a, dtype=float) for a in w2)
    return lambda x: np.interp(x, r, vals, left=0.0, right=0.0)


def radial_log_inequality_check(w2, interval, v, D1=None, m=None, r_range=None, n=2048):
    """Check int (|v'|^2 + w2 |v|^2) r dr >= D1 int |v|^2 / (1 + r^2 log^2(r/m)) r dr.

    Parameters
    ----------
    w2 : W2Profile, (r_grid, values) pair, or callable
        Grid data are interpolated linearly and taken as zero off the grid.
    interval : (alpha, beta, L)
    v : 1-d profile with ``value``, ``derivative`` and ``support``, or None
    D1, m : float, optional
        Default to the constants computed from ``interval``.
    r_range : (float, float), optional
        Radial domain ``v`` must live in; defaults to the w2 grid span.
    """
    a, b, L = (float(x) for x in interval)
    m0, _, _, d1 = theorem3_constants(a, b, L)
    D1 = float(d1) if D1 is None else float(D1)
    m = float(m0) if m is None else float(m)
    meta = {"alpha": a, "beta": b, "L": L, "D1": D1, "m": m}
    if v is None:
        return VerificationReport.build("radial_log", 0.0, 0.0, 0.0, meta)
    if r_range is None and not callable(w2):
        grid = w2.r_grid if isinstance(w2, W2Profile) else np.asarray(w2[0], float)
        r_range = (float(grid[0]), float(grid[-1]))
    lo, hi = v.support
    if r_range is not None and (lo < r_range[0] * (1 - 1e-12) or hi > r_range[1] * (1 + 1e-12)):
        raise ValueError(f"v supported on [{lo:.4g}, {hi:.4g}], outside the grid {r_range}")
    lo = max(lo, 1e-300)
    # panel breaks at the kinks of the integrand
    breaks = sorted({lo, hi, *[x for x in (a, b, m) if lo < x < hi]})
    nodes, weights = [], []
    per = max(32, n // (len(breaks) - 1))
    for p, q in zip(breaks[:-1], breaks[1:]):
        x, w = _gl_composite(p, q, per)
        nodes.append(x)
        weights.append(w)
    r = np.concatenate(nodes)
    w = np.concatenate(weights) * r
    val = np.abs(v.value(r)) ** 2
    kin = np.abs(v.derivative(r)) ** 2
    pot = _w2_callable(w2)(r)
    lhs = float(np.sum(w * (kin + pot * val)))
    rhs = D1 * float(np.sum(w * val / (1 + (r * np.log(r / m)) ** 2)))
    return VerificationReport.build("radial_log", lhs, rhs, FORM_RTOL * abs(lhs), meta)


# ---------------------------------------------------------------- 3-d form


@dataclass(frozen=True)
class FormGrid:
    n_r: int = 96
    n_theta: int = 64
    n_phi: int = 64

    def doubled(self):
        return FormGrid(2 * self.n_r, 2 * self.n_theta, 2 * self.n_phi)


def _angular_nodes(u, grid: FormGrid):
    box = getattr(u, "angular_box", None)
    box = box() if callable(box) else None
    if box is None:
        tq, tw = _gl_composite(0.0, math.pi, grid.n_theta)
        pq = 2 * math.pi * np.arange(grid.n_phi) / grid.n_phi
        pw = np.full(grid.n_phi, 2 * math.pi / grid.n_phi)
        return tq, tw, pq, pw
    (t0, t1), phis = box
    tq, tw = _gl_composite(t0, t1, grid.n_theta)
    if phis is None:
        pq = 2 * math.pi * np.arange(grid.n_phi) / grid.n_phi
        pw = np.full(grid.n_phi, 2 * math.pi / grid.n_phi)
    else:
        pq, pw = _gl_composite(phis[0], phis[1], grid.n_phi)
    return tq, tw, pq, pw


def form_terms(gauge: GaugePotential | None, weight: Weight, u: TestFunction, grid=FormGrid()):
    """(kinetic, hardy, weighted, mass) integrals for u by tensor quadrature.

    kinetic = int |(-i grad - A) u|^2, hardy = (1/4) int |u|^2 / |x|^2,
    weighted = int w |u|^2 and mass = int |u|^2.
    """
    rq, rw = u.radial_nodes(grid.n_r)
    tq, tw, pq, pw = _angular_nodes(u, grid)
    R, T, P = np.meshgrid(rq, tq, pq, indexing="ij")
    dV = (rw[:, None, None] * rq[:, None, None] ** 2) * (tw * np.sin(tq))[None, :, None] * pw[None, None, :]
    pts = to_cartesian(R, T, P)
    val = u.value(pts)
    grad = u.gradient(pts)
    cov = -1j * grad
    if gauge is not None:
        A = gauge(pts)
        cov = cov - A * val[..., None]
    abs2 = np.abs(val) ** 2
    kinetic = float(np.sum(dV * np.sum(np.abs(cov) ** 2, axis=-1)))
    hardy = 0.25 * float(np.sum(dV * abs2 / R**2))
    weighted = float(np.sum(dV * weight.radial(R) * abs2))
    mass = float(np.sum(dV * abs2))
    return kinetic, hardy, weighted, mass


def form_margin(spec: FieldSpec | None, gauge: GaugePotential | None, weight: Weight,
                u: TestFunction | None, grid=FormGrid(), rtol=FORM_RTOL):
    """Check h_A[u] >= int w |u|^2 for one test function.

    ``gauge`` defaults to ``gauge_for(spec)``; with both None the field is zero.
    ``u=None`` is the zero function.
    """
    name = "form" if u is None else f"form:{u.name}"
    if u is None:
        return VerificationReport.build(name, 0.0, 0.0, 0.0, {"weight": weight.to_dict()})
    if gauge is None and spec is not None:
        gauge = gauge_for(spec)
    try:
        kinetic, hardy, weighted, mass = form_terms(gauge, weight, u, grid)
    except SingularPointError as exc:
        raise SingularPointError(f"gauge singular inside the support of {u.name}: {exc}") from exc
    lhs = kinetic - hardy
    meta = {"u": u.describe(), "kinetic": kinetic, "hardy": hardy, "mass": mass,
            "grid": {"n_r": grid.n_r, "n_theta": grid.n_theta, "n_phi": grid.n_phi},
            "weight": weight.to_dict()}
    return VerificationReport.build(name, lhs, weighted, rtol * abs(lhs), meta)


def diamagnetic_gap(gauge, u: TestFunction, grid=FormGrid()):
    """(int |(-i grad - A) u|^2, int |grad |u||^2) for real-valued u."""
    kinetic, _, _, _ = form_terms(gauge, Weight("zero"), u, grid)
    plain, _, _, _ = form_terms(None, Weight("zero"), u, grid)
    return kinetic, plain


# ---------------------------------------------------------------- suites


class _BoxedBump(GaussianBump):
    """Gaussian bump whose quadrature is restricted to the cone containing it."""

    def angular_box(self):
        c = float(np.linalg.norm(self.center))
        rad = _GAUSS_CUT * self.width
        if rad >= 0.9 * c:
            return None
        theta_c = math.acos(self.center[2] / c)
        delta = math.asin(rad / c)
        t0, t1 = max(theta_c - delta, 0.0), min(theta_c + delta, math.pi)
        rho = math.hypot(self.center[0], self.center[1])
        if rad >= 0.9 * rho:
            return (t0, t1), None
        phi_c = math.atan2(self.center[1], self.center[0])
        dphi = math.asin(rad / rho)
        return (t0, t1), (phi_c - dphi, phi_c + dphi)


def default_suite(cert: WeightCertificate | None = None, n=20, seed=0, scale=None, r_span=None):
    """Seeded family of ``n`` test functions adapted to the certificate's length scale.

    The suite mixes radial Gaussians times low angular modes, off-centre
    Gaussian bumps with azimuthal factors, and log-plateau functions
    r^(-1/2) P(log(r / R)) that probe the Hardy-critical direction.
    """
    if n < 1:
        raise ValueError("suite must be non-empty")
    rng = np.random.default_rng(seed)
    if scale is None:
        scale = _certificate_scale(cert)
    R = float(scale)
    members: list[TestFunction] = []
    modes = [(0, 0), (1, 0), (-1, 0), (1, 1), (2, 0), (0, 1)]
    # ordering is fixed so that truncating n keeps a balanced mix
    plan = []
    for k in range(n):
        plan.append(("mode", "bump", "log", "mode", "bump")[k % 5])
    for k, kind in enumerate(plan):
        if kind == "mode":
            m, p = modes[(k // 5) % len(modes)]
            centre = R * math.exp(rng.uniform(-0.7, 0.7))
            width = centre * rng.uniform(0.15, 0.45)
            members.append(RadialMode(RadialGaussian(centre, width), m=m, p=p))
        elif kind == "bump":
            r = R * math.exp(rng.uniform(-0.5, 0.5))
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            width = r * rng.uniform(0.1, 0.3)
            members.append(_BoxedBump(r * d, width, m=int(rng.integers(0, 3))))
        else:
            members.append(_log_member(R, rng, k, r_span))
    return members


def _log_member(R, rng, k, r_span=None):
    # alternate between plateaus around the scale and far-field ones
    if (k // 5) % 2 == 0:
        a = rng.uniform(-1.5, -0.5)
        b = rng.uniform(0.5, 1.5)
        prof = SmoothPlateau(a, b, ramp=rng.uniform(0.5, 1.5))
        return RadialMode(LogRadial(R, prof), m=0, name=f"logplateau(R={R:.3g},[{a:.2f},{b:.2f}])")
    # plateau in s = log log(r / R); r stays below e^230 so r^3 volume factors are finite
    s_top = math.log(230.0 - math.log(R))
    s0 = max(math.log(max(math.log(1.0 / R), 1.0) + 2.0), 1.0) + rng.uniform(0.5, 1.0)
    ramp = rng.uniform(0.6, 1.0)
    s1 = max(s0 + 0.5, s_top - ramp - rng.uniform(0.0, 0.4))
    prof = LogLogPlateau(s0, s1, ramp)
    return RadialMode(LogRadial(R, prof), m=0, name=f"logfar(R={R:.3g},s=[{s0:.2f},{s1:.2f}])")


def _certificate_scale(cert):
    if cert is None:
        return 1.0
    params = cert.weight.params
    if cert.weight.form == "log" and "R" in params:
        return float(params["R"])
    g = cert.grid or {}
    if "r_min" in g and "r_max" in g:
        return math.sqrt(float(g["r_min"]) * float(g["r_max"]))
    return 1.0


def certificate_audit(cert: WeightCertificate, spec: FieldSpec | None, gauge: GaugePotential | None,
                      suite, grid=FormGrid(), rtol=FORM_RTOL):
    """One form_margin report per suite member."""
    suite = list(suite)
    if not suite:
        raise ValueError("suite must be non-empty")
    if gauge is None and spec is not None:
        gauge = gauge_for(spec)
    return [form_margin(spec, gauge, cert.weight, u, grid, rtol) for u in suite]


def all_passed(reports):
    return all(r.passed for r in reports)
