"""scikit-learn style wrappers around the certificate pipeline.

``fit`` takes a field (a :class:`FieldSpec`, a built-in name, or a spec
document); ``X`` arrays are cartesian points (n, 3) or spherical (r, theta)
pairs (n, 2) depending on the estimator.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from .field import BUILTIN_NAMES, FieldSpec, builtin_field, gauge_for, parse_field_spec
from .flux import QuadratureConfig, flux_via_boundary, flux_via_surface
from .pipeline import PipelineConfig, certify
from .weights import WeightCertificate


def resolve_field(field, params=None) -> FieldSpec:
    """FieldSpec from a spec, built-in name, JSON text or dict."""
    if isinstance(field, FieldSpec):
        return field
    if isinstance(field, str) and field in BUILTIN_NAMES:
        return builtin_field(field, **(params or {}))
    spec = parse_field_spec(field)
    if params:
        doc = spec.to_dict()
        doc["parameters"] = {**doc["parameters"], **params}
        spec = parse_field_spec(doc)
    return spec


class HardyWeightEstimator(BaseEstimator):
    """Fit a weight certificate to a magnetic field; predict the weight at points.

    Parameters mirror :class:`PipelineConfig`.
    """

    def __init__(self, r_min=0.1, r_max=10.0, n_r=64, n_theta=64, quad_order=32,
                 n_theta_quad=64, n_phi_quad=64, method="boundary", n_max=64,
                 level_fraction=0.9, threshold=0.5, theorem="auto", r0=None):
        self.r_min = r_min
        self.r_max = r_max
        self.n_r = n_r
        self.n_theta = n_theta
        self.quad_order = quad_order
        self.n_theta_quad = n_theta_quad
        self.n_phi_quad = n_phi_quad
        self.method = method
        self.n_max = n_max
        self.level_fraction = level_fraction
        self.threshold = threshold
        self.theorem = theorem
        self.r0 = r0

    def _config(self):
        return PipelineConfig(**self.get_params())

    def fit(self, X, y=None):
        spec = resolve_field(X)
        res = certify(spec, self._config())
        self.field_ = spec
        if isinstance(res, WeightCertificate):
            self.certificate_ = res
            self.profile_ = self.w2_ = self.intervals_ = None
        else:
            self.certificate_ = res.certificate
            self.profile_ = res.profile
            self.w2_ = res.w2
            self.intervals_ = res.intervals
        return self

    def predict(self, X):
        """Weight w(x) at cartesian points of shape (n, 3)."""
        check_is_fitted(self, "certificate_")
        X = check_array(X, ensure_min_features=3)
        if X.shape[1] != 3:
            raise ValueError(f"expected 3 columns (x, y, z), got {X.shape[1]}")
        return self.certificate_.weight(X)


class FluxTransformer(TransformerMixin, BaseEstimator):
    """Map (r, theta) rows to the cap flux of the fitted field."""

    def __init__(self, method="boundary", quad_order=32, n_theta_quad=64, n_phi_quad=64):
        self.method = method
        self.quad_order = quad_order
        self.n_theta_quad = n_theta_quad
        self.n_phi_quad = n_phi_quad

    def fit(self, X, y=None):
        if self.method not in ("boundary", "surface"):
            raise ValueError(f"unknown method {self.method!r}")
        self.field_ = resolve_field(X)
        self.gauge_ = gauge_for(self.field_, self.quad_order)
        self.quadrature_ = QuadratureConfig(self.n_theta_quad, self.n_phi_quad)
        return self

    def transform(self, X):
        check_is_fitted(self, "field_")
        X = check_array(X, ensure_min_features=2)
        if X.shape[1] != 2:
            raise ValueError(f"expected 2 columns (r, theta), got {X.shape[1]}")
        if self.method == "boundary":
            return np.array([flux_via_boundary(self.gauge_, r, t, self.quadrature_) for r, t in X])
        return np.array([flux_via_surface(self.field_, r, t, self.quadrature_) for r, t in X])
