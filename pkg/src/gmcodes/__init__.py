"""Graphical models of binary linear codes: construction, transformation,
cycle analysis, complexity bounds, greedy extraction and soft-in soft-out
decoding."""

from __future__ import annotations

from .cycles import CycleCensus, brute_force_census, census
from .decode import ChannelObservation, ber_sim, compare_ber, flood_decode, map_oracle
from .errors import CapError, GmError
from .extract import alg1_reduce_tanner, alg2_candidates, alg3_extract_gtg, alg4_extract_gm
from .fixtures import fixtures, get_fixture
from .gf2codes import BinaryMatrix, GeneralizedExtension, LinearCode
from .model import (
    Constraint,
    GraphicalModel,
    Hidden,
    build_gtg,
    build_tanner_graph,
    realized_code,
    verify_qm,
)
from .transform import normalize_to_tanner, replay

__all__ = [
    "BinaryMatrix",
    "CapError",
    "ChannelObservation",
    "Constraint",
    "CycleCensus",
    "GeneralizedExtension",
    "GmError",
    "GraphicalModel",
    "Hidden",
    "LinearCode",
    "alg1_reduce_tanner",
    "alg2_candidates",
    "alg3_extract_gtg",
    "alg4_extract_gm",
    "ber_sim",
    "brute_force_census",
    "build_gtg",
    "build_tanner_graph",
    "census",
    "compare_ber",
    "fixtures",
    "flood_decode",
    "get_fixture",
    "map_oracle",
    "normalize_to_tanner",
    "realized_code",
    "replay",
    "verify_qm",
]
