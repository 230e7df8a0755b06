"""Synthetic scenes and an independent answer oracle for differential testing."""

from .answers import brute_force_clusters, oracle_answers
from .differential import DifferentialReport, differential_run
from .synth import PlacementInfeasible, SceneRecipe, random_recipe, random_scene, synth_scene

__all__ = [
    "DifferentialReport",
    "PlacementInfeasible",
    "SceneRecipe",
    "brute_force_clusters",
    "differential_run",
    "oracle_answers",
    "random_recipe",
    "random_scene",
    "synth_scene",
]
