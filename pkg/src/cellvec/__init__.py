"""cellvec: place embeddings from GPS waypoint streams.

Pipeline: waypoint CSV -> per-day trajectories -> stop detection -> 30 m
Morton-grid cell sequences -> frequency-filtered corpus -> skip-gram
negative-sampling embeddings -> similarity analytics (neighbor reports,
category t-tests, distance-decay regression, semi-variograms).
"""

__version__ = "0.1.0"

from .corpus import Corpus, CorpusStats, Vocab, build_vocab, corpus_stats, encode_corpus
from .embedding import (
    EmbeddingModel,
    SkipGramEmbedder,
    cosine_similarity,
    load_embeddings,
    save_embeddings,
    train_embeddings,
)
from .errors import CellvecError, FormatError, TrainingDivergedError
from .geo import GeoPoint, GridSpec
from .ingest import RawTrajectory, WaypointRecord, parse_waypoints, segment_trajectories
from .poi import MIXED_LABEL, NO_POI_LABEL, PoiRecord, label_cells, load_pois
from .stats import OLSAccumulator, OLSFit, WelchResult, ols_fit, welch_t
from .stops import CellSequence, StopDetector, StopEvent, collapse_to_cells
from .synth import SynthConfig, World, generate_trajectories, generate_world

__all__ = [
    "__version__",
    "CellvecError",
    "CellSequence",
    "Corpus",
    "CorpusStats",
    "EmbeddingModel",
    "FormatError",
    "GeoPoint",
    "GridSpec",
    "MIXED_LABEL",
    "NO_POI_LABEL",
    "OLSAccumulator",
    "OLSFit",
    "PoiRecord",
    "RawTrajectory",
    "SkipGramEmbedder",
    "StopDetector",
    "StopEvent",
    "SynthConfig",
    "TrainingDivergedError",
    "Vocab",
    "WaypointRecord",
    "WelchResult",
    "World",
    "build_vocab",
    "collapse_to_cells",
    "corpus_stats",
    "cosine_similarity",
    "encode_corpus",
    "generate_trajectories",
    "generate_world",
    "label_cells",
    "load_embeddings",
    "load_pois",
    "ols_fit",
    "parse_waypoints",
    "save_embeddings",
    "segment_trajectories",
    "train_embeddings",
    "welch_t",
]
