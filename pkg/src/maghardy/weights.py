"""Hardy-improvement weights and their constants.

Flux profiles are turned into the angular potential w1, angular witnesses
(M, theta0, theta1) with their spectral lower bound lambda, the radial
weight w2, radial intervals with levels, and finally weight certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .flux import FluxProfile

THEOREMS = ("T1_log", "T2_inverse_square", "T3_log", "T4_inverse_square", "AB_closed_form", "none")
WEIGHT_FORMS = ("log", "inverse_square", "hardy_scaled", "zero")


# ---------------------------------------------------------------- angular part


def nearest_integer_distance_sq(phi):
    """min over integers k of (k - phi)^2."""
    phi = np.asarray(phi, dtype=float)
    lo = np.floor(phi) - 1
    ks = lo[..., None] + np.arange(4)  # floor-1 .. ceil+1
    out = np.min((ks - phi[..., None]) ** 2, axis=-1)
    return float(out) if out.ndim == 0 else out


def w1_potential(flux: FluxProfile):
    """w1 = min_k (k - Phi)^2 / sin^2(theta), one row per radius."""
    s = np.sin(flux.theta_grid)
    return nearest_integer_distance_sq(flux.values) / (s * s)[None, :]


def k1_constant(c):
    """Poincare constant for functions on (0, pi) vanishing at c, weight sin(theta)."""
    c = np.asarray(c, dtype=float)
    if np.any(c <= 0) or np.any(c >= np.pi):
        raise ValueError("c must lie in (0, pi)")
    out = np.maximum(c * c, (c - np.pi) ** 2) / (2 * np.sin(c))
    return float(out) if out.ndim == 0 else out


def k2_constant(theta0, theta1):
    return 2.0 / (np.asarray(theta1, float) - np.asarray(theta0, float))


def lambda_constant(M, theta0, theta1):
    """Lower bound for the weighted Neumann ground state when V >= M on [theta0, theta1]."""
    M = np.asarray(M, dtype=float)
    t0 = np.asarray(theta0, dtype=float)
    t1 = np.asarray(theta1, dtype=float)
    if np.any(t0 <= 0) or np.any(t1 >= np.pi) or np.any(t1 <= t0):
        raise ValueError("need 0 < theta0 < theta1 < pi")
    if np.any(M < 0):
        raise ValueError("M must be non-negative")
    k1 = k1_constant(0.5 * (t0 + t1))
    k2 = k2_constant(t0, t1)
    out = M / (2 + 4 * k1 * M + 4 * k1 * k2)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class AngularWitness:
    r: float | None
    M: float
    theta0: float
    theta1: float
    lambda_value: float

    def to_dict(self):
        return {"r": self.r, "M": self.M, "theta0": self.theta0, "theta1": self.theta1,
                "lambda": self.lambda_value}


def angular_witness_search(w1_row, theta_grid, r=None, level_floor=0.0):
    """Best (M, theta0, theta1) for one w1 row, or None.

    Every pair of grid points theta_i < theta_j is a candidate interval with
    the largest admissible level M = min(w1[i..j]); the pair maximizing
    lambda(M, theta_i, theta_j) wins.  This is the exhaustive limit of a
    sweep over levels.  Ties go to the smallest theta0, then theta1.
    """
    w = np.asarray(w1_row, dtype=float)
    t = np.asarray(theta_grid, dtype=float)
    if w.shape != t.shape:
        raise ValueError("w1_row and theta_grid must have the same length")
    if not np.any(w > level_floor):
        return None
    n = len(w)
    best = None
    best_lam = 0.0
    for i in range(n - 1):
        if w[i] <= level_floor:
            continue
        run_min = np.minimum.accumulate(w[i:])[1:]
        ok = run_min > level_floor
        if not ok[0]:
            continue
        # run_min is non-increasing, so the admissible j form a prefix
        stop = int(np.argmin(ok)) if not ok.all() else len(ok)
        M = run_min[:stop]
        t1 = t[i + 1:i + 1 + stop]
        lam = lambda_constant(M, t[i], t1)
        lam = np.atleast_1d(lam)
        j = int(np.argmax(lam))
        if lam[j] > best_lam:
            best_lam = float(lam[j])
            best = (float(M[j]), float(t[i]), float(t1[j]))
    if best is None:
        return None
    return AngularWitness(r=None if r is None else float(r), M=best[0], theta0=best[1],
                          theta1=best[2], lambda_value=best_lam)


@dataclass(frozen=True)
class W2Profile:
    r_grid: np.ndarray
    values: np.ndarray
    witnesses: tuple

    def to_records(self):
        return np.column_stack([self.r_grid, self.values])


def w2_profile(flux: FluxProfile, level_floor=0.0) -> W2Profile:
    """w2(r) = lambda(witness at r) / r^2, zero where no witness exists."""
    w1 = w1_potential(flux)
    values = np.zeros(len(flux.r_grid))
    witnesses = []
    for i, r in enumerate(flux.r_grid):
        wit = angular_witness_search(w1[i], flux.theta_grid, r=r, level_floor=level_floor)
        witnesses.append(wit)
        if wit is not None:
            values[i] = wit.lambda_value / (r * r)
    return W2Profile(np.asarray(flux.r_grid, float), values, tuple(witnesses))


# ---------------------------------------------------------------- radial intervals


@dataclass(frozen=True)
class RadialIntervalSet:
    alpha: np.ndarray
    beta: np.ndarray
    level: np.ndarray
    n_found: int = 0

    def __post_init__(self):
        a, b, L = self.alpha, self.beta, self.level
        if not (len(a) == len(b) == len(L)):
            raise ValueError("alpha, beta and level must have equal length")
        if len(a) and (np.any(a <= 0) or np.any(b <= a)):
            raise ValueError("intervals need 0 < alpha_j < beta_j")
        if len(a) > 1 and np.any(a[1:] < b[:-1]):
            raise ValueError("intervals must be sorted and pairwise disjoint")

    @classmethod
    def from_triples(cls, triples):
        arr = np.asarray(list(triples), dtype=float).reshape(-1, 3)
        return cls(arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy(), len(arr))

    def __len__(self):
        return len(self.alpha)

    @property
    def midpoints(self):
        return 0.5 * (self.alpha + self.beta)

    @property
    def truncated(self):
        return self.n_found > len(self)

    def triples(self):
        return [(float(a), float(b), float(L)) for a, b, L in zip(self.alpha, self.beta, self.level)]


def _runs(mask):
    """(start, stop) index pairs of maximal True runs, stop exclusive."""
    padded = np.concatenate([[False], mask, [False]])
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return list(zip(edges[::2], edges[1::2]))


def radial_interval_detection(r_grid, w2, n_max=64, level_fraction=0.9, threshold=0.5,
                              segment_length=None) -> RadialIntervalSet:
    """Intervals (alpha_j, beta_j) with levels L_j such that w2 >= L_j on the grid.

    Inside every maximal run of positive w2, the cells with w2 at least
    ``threshold`` times the run maximum form the interval cores (threshold 0
    keeps the whole run).  Optionally each core is cut into pieces of length
    ``segment_length``.  The level of a piece is ``level_fraction`` times the
    grid minimum of w2 over it.
    """
    r = np.asarray(r_grid, dtype=float)
    w = np.asarray(w2, dtype=float)
    if r.shape != w.shape:
        raise ValueError("r_grid and w2 must have the same shape")
    if not 0 < level_fraction <= 1:
        raise ValueError("level_fraction must lie in (0, 1]")
    pieces = []
    for a, b in _runs(w > 0):
        core = w[a:b] >= threshold * w[a:b].max()
        for c0, c1 in _runs(core):
            lo, hi = a + c0, a + c1
            if hi - lo < 2:
                continue
            if segment_length is None:
                bounds = [(lo, hi)]
            else:
                bounds = _segments(r, lo, hi, segment_length)
            for s0, s1 in bounds:
                pieces.append((r[s0], r[s1 - 1], level_fraction * w[s0:s1].min()))
    n_found = len(pieces)
    pieces = pieces[:n_max]
    if not pieces:
        return RadialIntervalSet(np.empty(0), np.empty(0), np.empty(0), 0)
    arr = np.array(pieces)
    return RadialIntervalSet(arr[:, 0], arr[:, 1], arr[:, 2], n_found)


def _segments(r, lo, hi, length):
    out = []
    start = r[lo]
    tol = 1e-9 * max(1.0, abs(r[hi - 1]))
    while start < r[hi - 1] - tol:
        stop = start + length
        idx = np.flatnonzero((r[lo:hi] >= start - tol) & (r[lo:hi] <= stop + tol)) + lo
        if len(idx) >= 2:
            out.append((idx[0], idx[-1] + 1))
        start = stop
    return out


def inverse_square_intervals(c5, r0, n_max=64):
    """Unit intervals (r0 + j, r0 + j + 1) with levels C5 / (r0 + j + 1)^2 (the infimum of C5/r^2)."""
    if c5 <= 0:
        raise ValueError("C5 must be positive")
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    j = np.arange(n_max, dtype=float)
    return RadialIntervalSet(r0 + j, r0 + j + 1, c5 / (r0 + j + 1) ** 2, n_max)


# ---------------------------------------------------------------- certificates


@dataclass(frozen=True)
class Weight:
    """Evaluable radial weight w(x).

    log             C / (1 + |x|^2 log^2(|x| / R))
    inverse_square  C / (1 + |x|^2)
    hardy_scaled    C / |x|^2
    zero            0
    """

    form: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.form not in WEIGHT_FORMS:
            raise ValueError(f"unknown weight form {self.form!r}")

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        if self.form == "zero":
            return np.zeros_like(r)
        C = self.params["C"]
        if self.form == "log":
            lg = np.log(r / self.params["R"])
            return C / (1 + (r * lg) ** 2)
        if self.form == "inverse_square":
            return C / (1 + r * r)
        return C / (r * r)

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        return self.radial(np.linalg.norm(pts, axis=-1))

    def scaled(self, factor):
        if self.form == "zero":
            return self
        return Weight(self.form, {**self.params, "C": self.params["C"] * factor})

    def to_dict(self):
        return {"form": self.form, "params": dict(self.params)}


@dataclass
class WeightCertificate:
    theorem: str
    constants: dict
    weight: Weight
    audit: list = field(default_factory=list)
    grid: dict = field(default_factory=dict)
    field: dict | None = None

    def __post_init__(self):
        if self.theorem not in THEOREMS:
            raise ValueError(f"unknown theorem label {self.theorem!r}")

    @property
    def fired(self):
        return self.theorem != "none"

    def to_dict(self):
        doc = {
            "theorem": self.theorem,
            "constants": {k: float(v) for k, v in self.constants.items()},
            "weight": self.weight.to_dict(),
            "audit": list(self.audit),
            "grid": dict(self.grid),
        }
        if self.field is not None:
            doc["field"] = self.field
        return doc

    @classmethod
    def from_dict(cls, doc):
        w = doc["weight"]
        return cls(
            theorem=doc["theorem"],
            constants={k: float(v) for k, v in doc.get("constants", {}).items()},
            weight=Weight(w["form"], {k: float(v) for k, v in w.get("params", {}).items()}),
            audit=list(doc.get("audit", [])),
            grid=dict(doc.get("grid", {})),
            field=doc.get("field"),
        )

    def inflated(self, factor):
        """Same certificate with the weight multiplied by ``factor``; for audit self-tests."""
        return WeightCertificate(
            self.theorem, dict(self.constants), self.weight.scaled(factor),
            self.audit + [f"weight inflated by {factor:g}"], dict(self.grid), self.field,
        )


def zero_certificate(reason="no radial flux: w1 vanishes identically"):
    return WeightCertificate("none", {}, Weight("zero"), [reason])


def theorem3_constants(alpha, beta, level):
    m = 0.5 * (alpha + beta)
    n1 = np.maximum(4.0, m * m / 2)
    n2 = 2.0 / (beta - alpha)
    d1 = level / (4 * n1 * level + 4 * n1 * n2 + 2)
    return m, n1, n2, d1


def certificate_theorem3(intervals: RadialIntervalSet, pick=None) -> WeightCertificate:
    """Log-weight certificate from one interval; by default the one with the largest D1."""
    if len(intervals) == 0:
        raise ValueError("empty interval set")
    m, n1, n2, d1 = theorem3_constants(intervals.alpha, intervals.beta, intervals.level)
    j = int(np.argmax(d1)) if pick is None else int(pick)
    if not 0 <= j < len(intervals):
        raise IndexError(f"interval index {j} out of range")
    constants = {
        "D1": d1[j], "n1": n1[j], "n2": n2[j], "L": intervals.level[j],
        "alpha_j": intervals.alpha[j], "beta_j": intervals.beta[j], "m_j": m[j], "j": j,
    }
    audit = [
        f"log weight centred at m_j of interval j={j} "
        f"({'maximizing D1' if pick is None else 'user choice'} over {len(intervals)} interval(s))"
    ]
    return WeightCertificate("T3_log", constants, Weight("log", {"C": float(d1[j]), "R": float(m[j])}), audit)


def theorem4_constants(intervals: RadialIntervalSet):
    """(D2, D3, D4) as maxima over the listed intervals, with m_{-1} = 0."""
    if len(intervals) == 0:
        raise ValueError("empty interval set")
    a, b, L = intervals.alpha, intervals.beta, intervals.level
    m = 0.5 * (a + b)
    m_prev = np.concatenate([[0.0], m[:-1]])
    dist2 = 1 + a * a
    gap = (m - m_prev) / dist2
    nxt = np.concatenate([gap[1:], [-np.inf]])
    d2 = np.max(1 / (L * dist2))
    d3 = np.max(gap)
    d4 = np.max(np.maximum(gap, nxt) / (L * (b - a) ** 2))
    return float(d2), float(d3), float(d4)


@dataclass(frozen=True)
class Theorem4Rejection:
    condition: int
    constant: str
    value: float
    cap: float
    constants: dict

    def __str__(self):
        return (f"condition {self.condition} violated: {self.constant} = {self.value:.6g} "
                f"exceeds cap {self.cap:.6g}")


def certificate_theorem4(intervals: RadialIntervalSet, cap=1e8):
    """Inverse-square certificate, or a rejection naming the first condition whose constant exceeds cap."""
    d2, d3, d4 = theorem4_constants(intervals)
    constants = {"D2": d2, "D3": d3, "D4": d4, "n_intervals": len(intervals)}
    for cond, name, val in ((1, "D2", d2), (2, "D3", d3), (3, "D4", d4)):
        if not np.isfinite(val) or val > cap:
            return Theorem4Rejection(cond, name, val, cap, constants)
    d5 = 1.0 / (2 * max(d3, max(d2, d4)))
    constants["D5"] = d5
    audit = [f"suprema audited over the first {len(intervals)} interval(s) only"]
    if intervals.truncated:
        audit.append(f"interval list truncated from {intervals.n_found} to {len(intervals)}")
    return WeightCertificate("T4_inverse_square", constants, Weight("inverse_square", {"C": d5}), audit)


# ---------------------------------------------------------------- closed forms


def ab_constants(alpha) -> WeightCertificate:
    """Hardy improvement C / |x|^2 for the field alpha cot(theta) / r^2 e_r."""
    alpha = float(alpha)
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if alpha < 1:
        C = min(alpha, 1 - alpha) ** 2
        constants = {"alpha": alpha, "C": C}
        audit = ["theta-kinetic term dropped; circle spectrum bound"]
    else:
        t1 = math.asin(1 / (2 * alpha))
        t0 = t1 / 2
        M = alpha * alpha
        C = lambda_constant(M, t0, t1)
        c = 0.5 * (t0 + t1)
        constants = {"alpha": alpha, "C": C, "M": M, "theta0": t0, "theta1": t1,
                     "k1": k1_constant(c), "k2": float(k2_constant(t0, t1)), "lambda": C}
        audit = ["alpha >= 1: angular witness (alpha^2, asin(1/2alpha)/2, asin(1/2alpha))"]
    constants["hardy_constant"] = 0.25 + C
    audit.append("field singular on the x3-axis; C1 regularity assumption not met")
    return WeightCertificate("AB_closed_form", constants, Weight("hardy_scaled", {"C": C}), audit)


def angular_infimum(w1_row):
    """inf over the theta grid of w1 (the bound obtained by dropping the theta kinetic term)."""
    return float(np.min(w1_row))
