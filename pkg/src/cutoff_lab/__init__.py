"""Exact mixing, relaxation and hitting-time analysis for lazy random walks
on finite spherically symmetric trees."""

from .errors import CutoffLabError
from .tree_model import TreeProfile, VertexPair, build_profile, enumerate_profiles

__all__ = [
    "CutoffLabError",
    "TreeProfile",
    "VertexPair",
    "build_profile",
    "enumerate_profiles",
]

__version__ = "0.1.0"
