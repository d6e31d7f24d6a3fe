"""Spherical-cap flux by surface quadrature and by the boundary circulation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import FieldSpec, GaugePotential, eval_field, gauge_for, to_cartesian


@dataclass(frozen=True)
class QuadratureConfig:
    n_theta_quad: int = 64
    n_phi_quad: int = 64
    rule: str = "gauss_legendre"

    def __post_init__(self):
        if self.n_theta_quad < 8:
            raise ValueError("n_theta_quad must be >= 8")
        if self.n_phi_quad < 3:
            raise ValueError("n_phi_quad must be >= 3")
        if self.rule not in ("gauss_legendre", "trapezoid_periodic"):
            raise ValueError(f"unknown rule {self.rule!r}")

    def theta_nodes(self, theta):
        """Open nodes and weights on (0, theta)."""
        n = self.n_theta_quad
        if self.rule == "gauss_legendre":
            x, w = np.polynomial.legendre.leggauss(n)
            return 0.5 * theta * (x + 1.0), 0.5 * theta * w
        # midpoint rule: also open
        h = theta / n
        return (np.arange(n) + 0.5) * h, np.full(n, h)

    def phi_nodes(self):
        n = self.n_phi_quad
        return 2 * np.pi * np.arange(n) / n, np.full(n, 2 * np.pi / n)


@dataclass(frozen=True)
class FluxProfile:
    r_grid: np.ndarray
    theta_grid: np.ndarray
    values: np.ndarray
    method: str

    def __post_init__(self):
        validate_grids(self.r_grid, self.theta_grid)
        if self.values.shape != (len(self.r_grid), len(self.theta_grid)):
            raise ValueError("values must have shape (len(r_grid), len(theta_grid))")

    def rows(self):
        return [(self.r_grid[i], self.theta_grid, self.values[i]) for i in range(len(self.r_grid))]

    def to_records(self):
        rr, tt = np.meshgrid(self.r_grid, self.theta_grid, indexing="ij")
        return np.column_stack([rr.ravel(), tt.ravel(), self.values.ravel()])


def validate_grids(r_grid, theta_grid):
    r = np.asarray(r_grid, dtype=float)
    t = np.asarray(theta_grid, dtype=float)
    if r.ndim != 1 or t.ndim != 1 or len(r) == 0 or len(t) == 0:
        raise ValueError("grids must be non-empty 1-d arrays")
    if np.any(r <= 0) or np.any(np.diff(r) <= 0):
        raise ValueError("r_grid must be positive and strictly increasing")
    if np.any(t <= 0) or np.any(t >= np.pi) or np.any(np.diff(t) <= 0):
        raise ValueError("theta_grid must be strictly increasing inside (0, pi)")


def _check_cap(r, theta):
    if not r > 0:
        raise ValueError("r must be positive")
    if not 0 < theta < np.pi:
        raise ValueError("theta must lie in (0, pi)")


def flux_via_surface(spec: FieldSpec, r, theta, q=QuadratureConfig()):
    """(1/2pi) * int over the cap S(r, theta) of B_r dS."""
    _check_cap(r, theta)
    tq, tw = q.theta_nodes(theta)
    pq, pw = q.phi_nodes()
    T, P = np.meshgrid(tq, pq, indexing="ij")
    pts = to_cartesian(r, T, P)
    b_r = np.sum(eval_field(spec, pts) * pts, axis=-1) / r
    if not np.all(np.isfinite(b_r)):
        raise ValueError("non-finite integrand sample")
    integrand = b_r * (r * r * np.sin(T))
    return float(tw @ integrand @ pw) / (2 * np.pi)


def flux_via_boundary(gauge: GaugePotential, r, theta, q=QuadratureConfig()):
    """(r sin(theta) / 2pi) * circulation integral of A_phi around the cap boundary."""
    _check_cap(r, theta)
    pq, pw = q.phi_nodes()
    a_phi = gauge.azimuthal(r, theta, pq)
    return float(r * np.sin(theta) * (a_phi @ pw) / (2 * np.pi))


def _boundary_row(gauge, r, thetas, q):
    pq, pw = q.phi_nodes()
    T, P = np.meshgrid(thetas, pq, indexing="ij")
    a_phi = gauge.azimuthal(r, T, P)
    return r * np.sin(thetas) * (a_phi @ pw) / (2 * np.pi)


def flux_profile(spec: FieldSpec, gauge: GaugePotential | None, r_grid, theta_grid,
                 q=QuadratureConfig(), method="boundary") -> FluxProfile:
    r_grid = np.asarray(r_grid, dtype=float)
    theta_grid = np.asarray(theta_grid, dtype=float)
    validate_grids(r_grid, theta_grid)
    values = np.empty((len(r_grid), len(theta_grid)))
    if method == "boundary":
        gauge = gauge if gauge is not None else gauge_for(spec)
        for i, r in enumerate(r_grid):
            values[i] = _boundary_row(gauge, r, theta_grid, q)
    elif method == "surface":
        for i, r in enumerate(r_grid):
            values[i] = [flux_via_surface(spec, r, t, q) for t in theta_grid]
    else:
        raise ValueError(f"unknown method {method!r}; expected 'surface' or 'boundary'")
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite flux value")
    return FluxProfile(r_grid, theta_grid, values, method)


def open_theta_grid(n):
    """Uniform grid of n points with half-cell offset, strictly inside (0, pi)."""
    return (np.arange(n) + 0.5) * np.pi / n
