"""Audio-token compression toolkit: compressors, adapter math and evaluation metrics."""
from tokcomp._accel import BACKEND
from tokcomp.compress import (
    Boundaries,
    CompressionOutcome,
    adjacent_dissimilarity,
    detect_peaks,
    global_pool,
    merge_segments,
    segment_unsupervised,
    uniform_avg_pool,
    uniform_sample,
)
from tokcomp.featio import FeatureSequence, Utterance, read_features, write_features

__version__ = "0.1.0"
