"""Magnetic field specifications, evaluation and the transversal gauge."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .expr import Expression, ExpressionError

CARTESIAN_VARS = ("x", "y", "z")
SPHERICAL_VARS = ("r", "theta", "phi")
ALL_VARS = CARTESIAN_VARS + SPHERICAL_VARS

SINGULAR_KINDS = ("origin", "z-axis")

# relative distance below which a point counts as lying on a declared singular set
_AXIS_TOL = 1e-14


class FieldSpecError(ValueError):
    pass


class SingularPointError(ValueError):
    pass


# ---------------------------------------------------------------- coordinates


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    @classmethod
    def from_spherical(cls, r, theta, phi):
        st = math.sin(theta)
        return cls(r * math.cos(phi) * st, r * math.sin(phi) * st, r * math.cos(theta))

    @property
    def spherical(self):
        r, t, p = to_spherical(np.array([self.x, self.y, self.z]))
        return float(r), float(t), float(p)

    def __array__(self, dtype=None, copy=None):
        return np.array([self.x, self.y, self.z], dtype=dtype)


def as_points(p):
    """Coerce a Point3, a sequence of them, or an array to a float array (..., 3)."""
    if isinstance(p, Point3):
        return np.array([p.x, p.y, p.z], dtype=float)
    if isinstance(p, (list, tuple)) and p and isinstance(p[0], Point3):
        return np.array([[q.x, q.y, q.z] for q in p], dtype=float)
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1:] != (3,):
        raise ValueError(f"points must have a trailing dimension of 3, got shape {arr.shape}")
    return arr


def to_spherical(points):
    pts = np.asarray(points, dtype=float)
    x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
    rho = np.hypot(x, y)
    r = np.hypot(rho, z)
    theta = np.arctan2(rho, z)
    phi = np.mod(np.arctan2(y, x), 2 * np.pi)
    return r, theta, phi


def to_cartesian(r, theta, phi):
    r, theta, phi = np.broadcast_arrays(
        np.asarray(r, float), np.asarray(theta, float), np.asarray(phi, float)
    )
    st = np.sin(theta)
    return np.stack([r * np.cos(phi) * st, r * np.sin(phi) * st, r * np.cos(theta)], axis=-1)


def spherical_frame(theta, phi):
    """Unit vectors (e_r, e_theta, e_phi), each of shape (..., 3)."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    e_r = np.stack([st * cp, st * sp, ct], axis=-1)
    e_t = np.stack([ct * cp, ct * sp, -st], axis=-1)
    e_p = np.stack([-sp, cp, np.zeros_like(sp)], axis=-1)
    return e_r, e_t, e_p


# ---------------------------------------------------------------- field specs


@dataclass(frozen=True)
class FieldSpec:
    """A magnetic field given by three component expressions.

    ``potential`` optionally declares a vector potential (same coordinate
    system) whose curl is the field; it is used instead of the multipolar
    gauge where the latter is not applicable.
    """

    name: str
    coordinates: str
    components: tuple
    parameters: Mapping[str, float] = field(default_factory=dict)
    singular_set: str | None = None
    potential: tuple | None = None

    def __post_init__(self):
        if self.coordinates not in ("cartesian", "spherical"):
            raise FieldSpecError(f"unknown coordinate system {self.coordinates!r}")
        if len(self.components) != 3:
            raise FieldSpecError(f"expected 3 components, got {len(self.components)}")
        if self.potential is not None and len(self.potential) != 3:
            raise FieldSpecError(f"expected 3 potential components, got {len(self.potential)}")

    @property
    def singular_kinds(self):
        if not self.singular_set:
            return ()
        return tuple(s.strip() for s in self.singular_set.split(",") if s.strip())

    def scaled(self, alpha):
        """The field alpha * B (and alpha * A for a declared potential)."""
        alpha = float(alpha)

        def scale(exprs):
            if exprs is None:
                return None
            return tuple(_scaled_expression(e, alpha) for e in exprs)

        return replace(
            self,
            name=f"{self.name}*{alpha:g}",
            components=scale(self.components),
            potential=scale(self.potential),
        )

    def to_dict(self):
        doc = {
            "name": self.name,
            "coordinates": self.coordinates,
            "components": [e.text for e in self.components],
            "parameters": dict(self.parameters),
        }
        if self.singular_set:
            doc["singular_set"] = self.singular_set
        if self.potential is not None:
            doc["potential"] = [e.text for e in self.potential]
        return doc


def _scaled_expression(expr, alpha):
    return Expression(f"({alpha!r})*({expr.text})")


def parse_field_spec(doc) -> FieldSpec:
    """Build a FieldSpec from a JSON document (str) or an already-decoded dict."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise FieldSpecError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise FieldSpecError("field spec must be a JSON object")
    missing = [k for k in ("coordinates", "components") if k not in doc]
    if missing:
        raise FieldSpecError(f"missing key(s): {', '.join(missing)}")

    coords = doc["coordinates"]
    params = {str(k): float(v) for k, v in (doc.get("parameters") or {}).items()}
    clash = set(params) & (set(ALL_VARS) | {"pi"})
    if clash:
        raise FieldSpecError(f"parameter names shadow built-in names: {sorted(clash)}")
    allowed = set(ALL_VARS) | set(params)

    comps = doc["components"]
    if not isinstance(comps, (list, tuple)) or len(comps) != 3:
        n = len(comps) if isinstance(comps, (list, tuple)) else "non-list"
        raise FieldSpecError(f"expected 3 components, got {n}")
    components = tuple(_parse_component(c, allowed, i) for i, c in enumerate(comps))

    potential = doc.get("potential")
    if potential is not None:
        if not isinstance(potential, (list, tuple)) or len(potential) != 3:
            raise FieldSpecError("potential must list 3 components")
        potential = tuple(_parse_component(c, allowed, i) for i, c in enumerate(potential))

    singular = doc.get("singular_set")
    if singular:
        for kind in (s.strip() for s in str(singular).split(",")):
            if kind and kind not in SINGULAR_KINDS:
                raise FieldSpecError(
                    f"unknown singular set {kind!r}; expected one of {SINGULAR_KINDS}"
                )

    return FieldSpec(
        name=str(doc.get("name", "field")),
        coordinates=coords,
        components=components,
        parameters=params,
        singular_set=singular or None,
        potential=potential,
    )


def _parse_component(text, allowed, index):
    try:
        return Expression(str(text), allowed)
    except ExpressionError as exc:
        err = ExpressionError(f"component {index}: {exc.args[0]}")
        err.offset, err.text = exc.offset, exc.text
        raise err from exc


# ---------------------------------------------------------------- built-ins


def _shell_components():
    m = "max(0, 1 - ((r - R)/w)^2)"
    b = f"{m}^4"
    db = f"(-8*(r - R)/w^2*{m}^3)"
    # B = curl(g(r) (-y, x, 0)) with g = amp*b/r^2
    dg_over_r = f"amp*({db}/r^3 - 2*{b}/r^4)"
    comps = [
        f"{dg_over_r}*(-x*z)",
        f"{dg_over_r}*(-y*z)",
        f"{dg_over_r}*(x^2 + y^2) + 2*amp*{b}/r^2",
    ]
    pot = [f"-amp*{b}/r^2*y", f"amp*{b}/r^2*x", "0"]
    return comps, pot


def builtin_field(name, **params) -> FieldSpec:
    """Named example fields.

    uniform  B = (0, 0, b)
    zero     B = 0
    ab3d     B = alpha cot(theta) / r^2 e_r with A = alpha / r e_phi (singular on the x3-axis)
    shell    compactly supported field curl(g(r) (-y, x, 0)); cap flux amp * bump(r) sin^2(theta)
    """
    if name == "uniform":
        p = {"b": 1.0, **params}
        doc = {"name": "uniform", "coordinates": "cartesian", "components": ["0", "0", "b"]}
    elif name == "zero":
        p = dict(params)
        doc = {"name": "zero", "coordinates": "cartesian", "components": ["0", "0", "0"]}
    elif name == "ab3d":
        p = {"alpha": 0.5, **params}
        doc = {
            "name": "ab3d",
            "coordinates": "spherical",
            "components": ["alpha*cos(theta)/(sin(theta)*r^2)", "0", "0"],
            "potential": ["0", "0", "alpha/r"],
            "singular_set": "z-axis",
        }
    elif name == "shell":
        p = {"R": 1e-4, "amp": 0.5, **params}
        p.setdefault("w", 0.5 * p["R"])
        comps, pot = _shell_components()
        doc = {"name": "shell", "coordinates": "cartesian", "components": comps, "potential": pot}
    else:
        raise FieldSpecError(f"unknown built-in field {name!r}; expected uniform, zero, ab3d or shell")
    doc["parameters"] = p
    return parse_field_spec(doc)


BUILTIN_NAMES = ("uniform", "zero", "ab3d", "shell")


# ---------------------------------------------------------------- evaluation


def _env(spec, pts):
    r, theta, phi = to_spherical(pts)
    env = {
        "x": pts[..., 0],
        "y": pts[..., 1],
        "z": pts[..., 2],
        "r": r,
        "theta": theta,
        "phi": phi,
    }
    env.update(spec.parameters)
    return env, r, theta, phi


def check_regular(spec, pts):
    kinds = spec.singular_kinds
    if not kinds:
        return
    r, theta, _ = to_spherical(pts)
    bad = np.zeros(r.shape, dtype=bool)
    if "origin" in kinds:
        bad |= r == 0
    if "z-axis" in kinds:
        bad |= np.hypot(pts[..., 0], pts[..., 1]) <= _AXIS_TOL * r
    if np.any(bad):
        first = np.argwhere(np.atleast_1d(bad))[0]
        where = np.atleast_2d(pts)[tuple(first)] if pts.ndim > 1 else pts
        raise SingularPointError(f"evaluation at declared singular set ({spec.singular_set}) at {where}")


def _evaluate(exprs, coordinates, spec, pts):
    env, r, theta, phi = _env(spec, pts)
    shape = pts.shape[:-1]
    vals = [np.broadcast_to(np.asarray(e(env), dtype=float), shape) for e in exprs]
    if coordinates == "cartesian":
        out = np.stack(vals, axis=-1)
    else:
        e_r, e_t, e_p = spherical_frame(theta, phi)
        out = vals[0][..., None] * e_r + vals[1][..., None] * e_t + vals[2][..., None] * e_p
    if not np.all(np.isfinite(out)):
        raise SingularPointError(f"non-finite value of field {spec.name!r}")
    return out


def eval_field(spec: FieldSpec, p):
    """B at the given point(s) in the cartesian frame, shape (..., 3)."""
    pts = as_points(p)
    check_regular(spec, pts)
    return _evaluate(spec.components, spec.coordinates, spec, pts)


def radial_component(spec: FieldSpec, p):
    pts = as_points(p)
    r = np.linalg.norm(pts, axis=-1)
    if np.any(r == 0):
        raise ValueError("radial component undefined at r = 0")
    b = eval_field(spec, pts)
    out = np.sum(b * pts, axis=-1) / r
    return float(out) if out.ndim == 0 else out


def _partials(spec, pts, h):
    h = np.asarray(h, dtype=float)
    out = []
    for j in range(3):
        step = h[..., None] * np.eye(3)[j]
        out.append((eval_field(spec, pts + step)[..., j] - eval_field(spec, pts - step)[..., j]) / (2 * h))
    return out


def divergence_residual(spec: FieldSpec, p, h=1e-4):
    """Centered finite-difference divergence of B at p (an audit, not a gate)."""
    total = sum(_partials(spec, as_points(p), h))
    return float(total) if total.ndim == 0 else total


def relative_divergence(spec: FieldSpec, p, h=1e-4):
    """|d1 B1 + d2 B2 + d3 B3| / (|d1 B1| + |d2 B2| + |d3 B3|), zero where B is locally constant."""
    parts = _partials(spec, as_points(p), h)
    scale = sum(np.abs(d) for d in parts)
    total = np.abs(sum(parts))
    out = np.divide(total, scale, out=np.zeros_like(total), where=scale > 0)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------- gauges


class GaugePotential:
    """Vector potential A with curl A = B, evaluated at cartesian points."""

    kind = "abstract"

    def __init__(self, source: FieldSpec, quad_order=None):
        self.source = source
        self.quad_order = quad_order

    def __call__(self, p):
        pts = as_points(p)
        return self._evaluate(pts)

    evaluate = __call__

    def _evaluate(self, pts):
        raise NotImplementedError

    def plus_gradient(self, grad):
        """Gauge-transformed potential A + grad(Psi); ``grad`` maps points (...,3) to (...,3)."""
        return ShiftedGauge(self, grad)

    def azimuthal(self, r, theta, phi):
        """A . e_phi at spherical coordinates."""
        pts = to_cartesian(r, theta, phi)
        _, _, e_p = spherical_frame(theta, phi)
        return np.sum(self(pts) * e_p, axis=-1)


class MultipolarGauge(GaugePotential):
    """A(x) = int_0^1 B(s x) x (s x) ds by Gauss-Legendre quadrature in s.

    Written as (int_0^1 s B(s x) ds) x x, so x . A vanishes up to the
    rounding of a single cross and dot product.
    """

    kind = "multipolar"

    def __init__(self, source, quad_order=32, chunk=65536):
        if quad_order < 4:
            raise ValueError("quad_order must be >= 4")
        super().__init__(source, quad_order)
        nodes, weights = np.polynomial.legendre.leggauss(quad_order)
        self.s = 0.5 * (nodes + 1.0)
        self.w = 0.5 * weights
        self.chunk = chunk

    def _evaluate(self, pts):
        shape = pts.shape
        flat = pts.reshape(-1, 3)
        out = np.empty_like(flat)
        for start in range(0, len(flat), self.chunk):
            x = flat[start:start + self.chunk]
            samples = self.s[:, None, None] * x[None, :, :]
            try:
                b = eval_field(self.source, samples)
            except SingularPointError as exc:
                raise SingularPointError(f"segment from origin crosses singular set: {exc}") from exc
            moment = np.einsum("k,kni->ni", self.w * self.s, b)
            out[start:start + self.chunk] = np.cross(moment, x)
        return out.reshape(shape)


class ExplicitGauge(GaugePotential):
    """Potential declared alongside the field spec."""

    kind = "explicit"

    def __init__(self, source):
        if source.potential is None:
            raise ValueError(f"field {source.name!r} declares no potential")
        super().__init__(source, None)

    def _evaluate(self, pts):
        check_regular(self.source, pts)
        return _evaluate(self.source.potential, self.source.coordinates, self.source, pts)


class ShiftedGauge(GaugePotential):
    kind = "shifted"

    def __init__(self, base, grad):
        super().__init__(base.source, base.quad_order)
        self.base = base
        self.grad = grad

    def _evaluate(self, pts):
        return self.base(pts) + np.asarray(self.grad(pts), dtype=float)


def multipolar_gauge(spec: FieldSpec, quad_order=32) -> MultipolarGauge:
    return MultipolarGauge(spec, quad_order)


def gauge_for(spec: FieldSpec, quad_order=32) -> GaugePotential:
    """The declared potential if the spec has one, else the multipolar gauge."""
    if spec.potential is not None:
        return ExplicitGauge(spec)
    return MultipolarGauge(spec, quad_order)


def curl(gauge, p, h=1e-4):
    pts = as_points(p)
    h = np.asarray(h, dtype=float)[..., None]
    d = []
    for j in range(3):
        step = h * np.eye(3)[j]
        d.append((gauge(pts + step) - gauge(pts - step)) / (2 * h))
    # d[j][..., k] = dA_k / dx_j
    return np.stack(
        [
            d[1][..., 2] - d[2][..., 1],
            d[2][..., 0] - d[0][..., 2],
            d[0][..., 1] - d[1][..., 0],
        ],
        axis=-1,
    )


def curl_residual(gauge: GaugePotential, spec: FieldSpec, p, h=1e-4):
    """|curl_h A(p) - B(p)| with centered differences of step h."""
    pts = as_points(p)
    res = np.linalg.norm(curl(gauge, pts, h) - eval_field(spec, pts), axis=-1)
    return float(res) if res.ndim == 0 else res


def probe_points(n=16, r_min=0.5, r_max=2.0, seed=0):
    """Seeded probe points away from the x3-axis, used by assumption audits."""
    rng = np.random.default_rng(seed)
    r = rng.uniform(r_min, r_max, n)
    theta = rng.uniform(0.2, np.pi - 0.2, n)
    phi = rng.uniform(0, 2 * np.pi, n)
    return to_cartesian(r, theta, phi)
