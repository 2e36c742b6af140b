"""Multiscale dynamic graph representation and matching.

Feature maps become feature graphs (sampled node vectors plus a Gaussian
spatial adjacency); graph blocks of squeeze-excitation and attention layers
refine them; dynamic matching prunes dissimilar node pairs before scoring.
"""

from ._backend import NAME as BACKEND
from .graph import FeatureGraph, LocalizerSpec, build_adjacency, make_feature_graph
from .matcher import (MatchResult, MultiscaleRepresentation, TripletBatch, dynamic_match,
                      match_score, similarity, triplet_loss)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "FeatureGraph", "LocalizerSpec", "MatchResult", "MultiscaleRepresentation",
    "TripletBatch", "build_adjacency", "dynamic_match", "make_feature_graph", "match_score",
    "similarity", "triplet_loss",
]
