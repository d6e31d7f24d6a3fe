"""Numerical Hardy-weight certificates for three-dimensional magnetic fields."""

from .field import FieldSpec, builtin_field, gauge_for, multipolar_gauge, parse_field_spec
from .flux import flux_profile, flux_via_boundary, flux_via_surface
from .pipeline import PipelineConfig, certify
from .weights import Weight, WeightCertificate, ab_constants

__all__ = [
    "FieldSpec", "PipelineConfig", "Weight", "WeightCertificate", "ab_constants", "builtin_field", "certify",
    "flux_profile", "flux_via_boundary", "flux_via_surface", "gauge_for", "multipolar_gauge", "parse_field_spec",
]
