"""Test functions with analytic gradients for the quadratic-form checks.

3-d functions expose ``value(pts)``, ``gradient(pts)`` (complex, cartesian)
and ``radial_nodes(n)`` giving a radial quadrature that covers their support.
1-d profiles expose ``value(t)``, ``derivative(t)`` and ``support``.
"""

from __future__ import annotations

import math

import numpy as np

from .field import spherical_frame, to_spherical

# Gaussian tails are cut where they drop below this fraction of the peak
TRUNCATION = 1e-12
_GAUSS_CUT = math.sqrt(-2 * math.log(TRUNCATION))


def _gl_composite(a, b, n, panel=16):
    """Composite Gauss-Legendre nodes/weights on [a, b] with about n nodes."""
    panels = max(1, int(round(n / panel)))
    x, w = np.polynomial.legendre.leggauss(panel)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


# ---------------------------------------------------------------- 1-d profiles


def smoothstep(s):
    """C2 step: 0 for s <= 0, 1 for s >= 1, and its derivative."""
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10 - 15 * s + 6 * s * s), 30 * s * s * (1 - s) ** 2


class SmoothPlateau:
    """1 on [a, b], C2 ramps of width ``ramp`` on both sides, times (t - shift)^power."""

    def __init__(self, a, b, ramp, power=0.0, shift=None):
        if b < a or ramp <= 0:
            raise ValueError("need a <= b and ramp > 0")
        self.a, self.b, self.ramp = float(a), float(b), float(ramp)
        self.power = float(power)
        self.shift = float(a - ramp - 1.0 if shift is None else shift)
        if power and self.shift >= a - ramp:
            raise ValueError("shift must lie left of the support")

    @property
    def support(self):
        return self.a - self.ramp, self.b + self.ramp

    def _parts(self, t):
        t = np.asarray(t, dtype=float)
        up, dup = smoothstep((t - (self.a - self.ramp)) / self.ramp)
        down, ddown = smoothstep(((self.b + self.ramp) - t) / self.ramp)
        p = up * down
        dp = (dup * down - up * ddown) / self.ramp
        if self.power:
            s = np.maximum(t - self.shift, 1e-300)
            g = s**self.power
            dg = self.power * s ** (self.power - 1)
            return p * g, dp * g + p * dg
        return p, dp

    def value(self, t):
        return self._parts(t)[0]

    def derivative(self, t):
        return self._parts(t)[1]


class LogLogPlateau:
    """t^(1/2) psi(log t) with psi a :class:`SmoothPlateau` in s = log t.

    For this profile int |P'|^2 dt / int |P|^2 / t^2 dt equals
    1/4 + int psi'^2 ds / int psi^2 ds, so long plateaus approach the 1/4 limit.
    """

    def __init__(self, s0, s1, ramp):
        self.psi = SmoothPlateau(s0, s1, ramp)

    @property
    def support(self):
        a, b = self.psi.support
        return math.exp(a), math.exp(b)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return np.sqrt(t) * self.psi.value(np.log(t))

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        s = np.log(t)
        return (0.5 * self.psi.value(s) + self.psi.derivative(s)) / np.sqrt(t)

    def nodes(self, n):
        s, w = _gl_composite(*self.psi.support, n)
        t = np.exp(s)
        return t, w * t


class RadialGaussian:
    """exp(-(r - center)^2 / (2 width^2)) as a function of r >= 0."""

    def __init__(self, center, width):
        self.center, self.width = float(center), float(width)

    @property
    def support(self):
        lo = max(self.center - _GAUSS_CUT * self.width, 0.0)
        return lo, self.center + _GAUSS_CUT * self.width

    def value(self, r):
        return np.exp(-0.5 * ((np.asarray(r) - self.center) / self.width) ** 2)

    def derivative(self, r):
        d = np.asarray(r) - self.center
        return -d / self.width**2 * self.value(r)

    def radial_nodes(self, n):
        lo, hi = self.support
        lo = max(lo, 1e-9 * hi)
        return _gl_composite(lo, hi, n)


class LogRadial:
    """r^(-1/2) P(log(r / R0)) for a 1-d profile P; the Hardy-critical radial shape."""

    def __init__(self, R0, profile):
        self.R0 = float(R0)
        self.profile = profile

    @property
    def support(self):
        t0, t1 = self.profile.support
        return self.R0 * math.exp(t0), self.R0 * math.exp(t1)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return r**-0.5 * self.profile.value(np.log(r / self.R0))

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        t = np.log(r / self.R0)
        return r**-1.5 * (self.profile.derivative(t) - 0.5 * self.profile.value(t))

    def radial_nodes(self, n):
        if hasattr(self.profile, "nodes"):
            t, w = self.profile.nodes(n)
        else:
            t, w = _gl_composite(*self.profile.support, n)
        r = self.R0 * np.exp(t)
        return r, w * r


# ---------------------------------------------------------------- 3-d functions


class TestFunction:
    kind = "abstract"
    name = "u"

    def value(self, pts):
        raise NotImplementedError

    def gradient(self, pts):
        raise NotImplementedError

    def radial_nodes(self, n):
        raise NotImplementedError

    def describe(self):
        return {"kind": self.kind, "name": self.name}


class GaussianBump(TestFunction):
    """exp(-|x - c|^2 / (2 width^2)) (x + i y)^m / scale^m, smooth for integer m >= 0.

    Negative m uses (x - i y)^|m|.
    """

    kind = "gaussian_bump"

    def __init__(self, center, width, m=0, name=None):
        self.center = np.asarray(center, dtype=float)
        self.width = float(width)
        self.m = int(m)
        self.scale = max(float(np.linalg.norm(self.center)), self.width)
        centre = ",".join(f"{c:.3g}" for c in self.center)
        self.name = name or f"bump(c=[{centre}],w={self.width:.3g},m={self.m})"

    def _z(self, pts):
        sign = 1 if self.m >= 0 else -1
        return (pts[..., 0] + sign * 1j * pts[..., 1]) / self.scale, sign

    def value(self, pts):
        d = pts - self.center
        g = np.exp(-0.5 * np.sum(d * d, axis=-1) / self.width**2)
        z, _ = self._z(pts)
        return g * z ** abs(self.m)

    def gradient(self, pts):
        d = pts - self.center
        g = np.exp(-0.5 * np.sum(d * d, axis=-1) / self.width**2)
        z, sign = self._z(pts)
        k = abs(self.m)
        grad = (-d / self.width**2) * (g * z**k)[..., None]
        if k:
            dz = np.array([1.0, sign * 1j, 0.0]) / self.scale
            grad = grad + (g * k * z ** (k - 1))[..., None] * dz
        return grad

    def radial_nodes(self, n):
        c = float(np.linalg.norm(self.center))
        hi = c + _GAUSS_CUT * self.width
        # the r^2 volume factor keeps the integrand smooth down to r = 0
        lo = max(c - _GAUSS_CUT * self.width, 0.0)
        return _gl_composite(lo, hi, n)

    def describe(self):
        return {"kind": self.kind, "name": self.name, "center": self.center.tolist(),
                "width": self.width, "m": self.m}


class RadialMode(TestFunction):
    """f(r) sin^|m|(theta) cos^p(theta) e^{i m phi}."""

    kind = "radial_profile"

    def __init__(self, radial, m=0, p=0, name=None):
        self.radial = radial
        self.m = int(m)
        self.p = int(p)
        self.name = name or f"mode({type(radial).__name__},m={self.m},p={self.p})"

    def _angular(self, theta, phi):
        k, p = abs(self.m), self.p
        st, ct = np.sin(theta), np.cos(theta)
        e = np.exp(1j * self.m * phi)
        Y = st**k * ct**p * e
        dY = (k * st ** max(k - 1, 0) * ct ** (p + 1) if k else 0.0)
        if p:
            dY = dY - p * st ** (k + 1) * ct ** (p - 1)
        dY = dY * e
        # (1 / sin theta) dY/dphi
        dphi = 1j * self.m * st ** max(k - 1, 0) * ct**p * e if k else np.zeros_like(Y)
        return Y, dY, dphi

    def value(self, pts):
        r, theta, phi = to_spherical(pts)
        Y, _, _ = self._angular(theta, phi)
        return self.radial.value(r) * Y

    def gradient(self, pts):
        r, theta, phi = to_spherical(pts)
        Y, dY, dphi = self._angular(theta, phi)
        f = self.radial.value(r)
        df = self.radial.derivative(r)
        e_r, e_t, e_p = spherical_frame(theta, phi)
        return ((df * Y)[..., None] * e_r + (f / r * dY)[..., None] * e_t
                + (f / r * dphi)[..., None] * e_p)

    def radial_nodes(self, n):
        return self.radial.radial_nodes(n)

    def describe(self):
        return {"kind": self.kind, "name": self.name, "m": self.m, "p": self.p,
                "radial": type(self.radial).__name__}


class Tabulated(TestFunction):
    """Arbitrary callable u(pts); gradient by centered differences with step 1e-5."""

    kind = "tabulated"
    step = 1e-5

    def __init__(self, func, r_range, name="tabulated"):
        self.func = func
        self.r_range = (float(r_range[0]), float(r_range[1]))
        self.name = name

    def value(self, pts):
        return np.asarray(self.func(pts), dtype=complex)

    def gradient(self, pts):
        h = self.step
        cols = []
        for j in range(3):
            e = np.eye(3)[j] * h
            cols.append((self.value(pts + e) - self.value(pts - e)) / (2 * h))
        return np.stack(cols, axis=-1)

    def radial_nodes(self, n):
        return _gl_composite(*self.r_range, n)


class AngularTrig:
    """Trigonometric polynomial on (0, pi) shifted to vanish at c."""

    def __init__(self, cos_coef, sin_coef, c):
        self.a = np.asarray(cos_coef, dtype=float)
        self.b = np.asarray(sin_coef, dtype=float)
        self.c = float(c)
        self.offset = 0.0
        self.offset = float(self._raw(np.array(self.c)))

    @classmethod
    def random(cls, rng, c, degree=5):
        scale = 1.0 / (1.0 + np.arange(degree + 1))
        return cls(rng.normal(size=degree + 1) * scale, rng.normal(size=degree + 1) * scale, c)

    def _raw(self, t):
        k = np.arange(len(self.a))
        t = np.asarray(t, dtype=float)[..., None]
        return np.sum(self.a * np.cos(k * t) + self.b * np.sin(k * t), axis=-1)

    def value(self, t):
        return self._raw(t) - self.offset

    def derivative(self, t):
        k = np.arange(len(self.a))
        t = np.asarray(t, dtype=float)[..., None]
        return np.sum(k * (-self.a * np.sin(k * t) + self.b * np.cos(k * t)), axis=-1)
