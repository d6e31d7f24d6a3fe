"""Shared fixtures: random divergence-free polynomial fields and small grids."""

import numpy as np

from maghardy.field import parse_field_spec


def _poly(rng, u, v, degree=2):
    terms = []
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            c = rng.normal()
            terms.append(f"({c!r})*{u}^{i}*{v}^{j}")
    return " + ".join(terms)


def random_solenoidal_field(seed, degree=2, name=None):
    """B = (p(y, z), q(x, z), s(x, y)): each component skips its own variable, so div B = 0."""
    rng = np.random.default_rng(seed)
    comps = [_poly(rng, "y", "z", degree), _poly(rng, "x", "z", degree), _poly(rng, "x", "y", degree)]
    return parse_field_spec({"name": name or f"poly{seed}", "coordinates": "cartesian",
                             "components": comps})


def random_points(n, seed, r_min=0.2, r_max=3.0, axis_gap=0.05):
    """Points with radius in [r_min, r_max] and polar angle kept away from the axis."""
    rng = np.random.default_rng(seed)
    r = rng.uniform(r_min, r_max, n)
    theta = rng.uniform(axis_gap, np.pi - axis_gap, n)
    phi = rng.uniform(0, 2 * np.pi, n)
    st = np.sin(theta)
    return np.stack([r * st * np.cos(phi), r * st * np.sin(phi), r * np.cos(theta)], axis=-1)
