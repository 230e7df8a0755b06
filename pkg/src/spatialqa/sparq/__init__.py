"""Predicate sieve and question template library."""

from .config import TemplateConfig
from .predicates import (
    at_least_x_classes,
    exists_nonoverlapping_cross_pair,
    has_depth,
    min_detections,
    single_instance_class_exists,
)
from .templates import SieveOutcome, TemplateDescriptor, build_registry, resolve_templates, run_template

__all__ = [
    "TemplateConfig",
    "TemplateDescriptor",
    "SieveOutcome",
    "build_registry",
    "resolve_templates",
    "run_template",
    "at_least_x_classes",
    "exists_nonoverlapping_cross_pair",
    "has_depth",
    "min_detections",
    "single_instance_class_exists",
]
