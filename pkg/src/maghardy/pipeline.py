"""End-to-end construction of weight certificates from a field spec."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .field import FieldSpec, SingularPointError, gauge_for, probe_points, relative_divergence
from .flux import FluxProfile, QuadratureConfig, flux_profile, open_theta_grid
from .weights import (RadialIntervalSet, W2Profile, WeightCertificate, ab_constants,
                      certificate_theorem3, certificate_theorem4, radial_interval_detection,
                      inverse_square_intervals, w2_profile, zero_certificate)

DIV_WARN = 1e-6


@dataclass(frozen=True)
class PipelineConfig:
    r_min: float = 0.1
    r_max: float = 10.0
    n_r: int = 64
    n_theta: int = 64
    quad_order: int = 32
    n_theta_quad: int = 64
    n_phi_quad: int = 64
    method: str = "boundary"
    n_max: int = 64
    level_fraction: float = 0.9
    threshold: float = 0.5
    theorem: str = "auto"
    r0: float | None = None
    t4_cap: float = 1e8

    def __post_init__(self):
        if not 0 < self.r_min < self.r_max:
            raise ValueError("need 0 < r_min < r_max")
        if self.n_r < 16 or self.n_theta < 16:
            raise ValueError("n_r and n_theta must be >= 16")
        if self.theorem not in ("auto", "T1", "T2", "AB"):
            raise ValueError(f"unknown theorem mode {self.theorem!r}")

    @property
    def quadrature(self):
        return QuadratureConfig(self.n_theta_quad, self.n_phi_quad)

    def r_grid(self):
        return np.geomspace(self.r_min, self.r_max, self.n_r)

    def theta_grid(self):
        return open_theta_grid(self.n_theta)

    def grid_dict(self):
        keys = ("r_min", "r_max", "n_r", "n_theta", "quad_order", "n_theta_quad", "n_phi_quad", "method")
        d = asdict(self)
        return {k: d[k] for k in keys}


def compute_profile(spec: FieldSpec, config=PipelineConfig(), gauge=None) -> FluxProfile:
    gauge = gauge if gauge is not None else gauge_for(spec, config.quad_order)
    return flux_profile(spec, gauge, config.r_grid(), config.theta_grid(), config.quadrature, config.method)


def assumption_audit(spec: FieldSpec, config=PipelineConfig(), n_probe=64, seed=0):
    """Warnings about the standing assumptions (C1 regularity, div B = 0)."""
    notes = []
    if spec.singular_kinds:
        notes.append(f"declared singular set ({spec.singular_set}): regularity assumptions not met")
    pts = probe_points(n_probe, config.r_min, config.r_max, seed)
    r = np.linalg.norm(pts, axis=-1)
    try:
        rel = float(np.max(relative_divergence(spec, pts, 1e-5 * r)))
    except SingularPointError as exc:
        notes.append(f"divergence audit skipped: {exc}")
        return notes
    if rel > DIV_WARN:
        notes.append(f"divergence residual {rel:.3g} exceeds {DIV_WARN:g} (relative)")
    return notes


@dataclass
class PipelineResult:
    profile: FluxProfile
    w2: W2Profile
    intervals: RadialIntervalSet
    certificate: WeightCertificate


def certify(spec: FieldSpec, config=PipelineConfig(), gauge=None) -> PipelineResult | WeightCertificate:
    """Run the whole construction and return the certificate with its intermediates."""
    audit = assumption_audit(spec, config)
    mode = config.theorem
    if mode == "AB" or (mode == "auto" and spec.name == "ab3d"):
        cert = ab_constants(spec.parameters.get("alpha", 0.5))
        cert.audit.extend(a for a in audit if a not in cert.audit and "singular" not in a)
        cert.grid = config.grid_dict()
        cert.field = spec.to_dict()
        return cert

    profile = compute_profile(spec, config, gauge)
    w2 = w2_profile(profile)
    if mode == "T2":
        cert, intervals = _inverse_square(w2, config)
    else:
        intervals = radial_interval_detection(
            w2.r_grid, w2.values, config.n_max, config.level_fraction, config.threshold
        )
        if len(intervals) == 0:
            cert = zero_certificate()
        else:
            t3 = certificate_theorem3(intervals)
            c = t3.constants
            cert = WeightCertificate(
                "T1_log",
                {**c, "C1": c["D1"], "R": c["m_j"]},
                t3.weight,
                t3.audit + ["index j of the log centre is not fixed by the statement; chosen to maximize D1"],
            )
    cert.audit = audit + cert.audit
    cert.grid = config.grid_dict()
    cert.field = spec.to_dict()
    return PipelineResult(profile, w2, intervals, cert)


def _inverse_square(w2: W2Profile, config):
    r0 = config.r0 if config.r0 is not None else float(w2.r_grid[0])
    sel = w2.r_grid > r0
    empty = RadialIntervalSet(np.empty(0), np.empty(0), np.empty(0), 0)
    if not np.any(sel):
        return zero_certificate(f"no radial grid points beyond r0 = {r0:g}"), empty
    c5_samples = w2.values[sel] * w2.r_grid[sel] ** 2
    c5 = float(np.min(c5_samples))
    if c5 <= 0:
        return zero_certificate("r^2 w2 vanishes somewhere beyond r0; flux condition fails"), empty
    intervals = inverse_square_intervals(c5, r0, config.n_max)
    res = certificate_theorem4(intervals, config.t4_cap)
    if not isinstance(res, WeightCertificate):
        return zero_certificate(f"inverse-square conditions rejected: {res}"), intervals
    res.theorem = "T2_inverse_square"
    res.constants.update({"C4": res.constants["D5"], "C5": c5, "r0": r0})
    res.audit.append(f"flux condition certified on r0 < r <= {config.r_max:g} only; assumed beyond")
    return res, intervals


def weak_field_ratio(spec: FieldSpec, alpha_list, config=PipelineConfig()):
    """[(alpha, w2(alpha B) / alpha^2)] per alpha; empty when every w2 vanishes."""
    out = []
    for alpha in alpha_list:
        scaled = spec.scaled(alpha)
        w2 = w2_profile(compute_profile(scaled, config))
        out.append((float(alpha), w2.values / alpha**2))
    if all(not np.any(ratio) for _, ratio in out):
        return []
    return out
