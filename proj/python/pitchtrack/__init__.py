"""Polyphonic pitch tracking: framewise f0s and notes from audio.

The heavy lifting lives in the `_pitchtrack` extension module; this package
re-exports its operations and adds small conveniences.
"""

from _pitchtrack import (  # noqa: F401
    HOP_SAMPLES,
    NUM_BINS,
    NUM_CENT_BINS,
    NUM_PITCH_BINS,
    SAMPLE_RATE,
    analyze,
    build_corpus,
    combined_metric,
    dct_index,
    evaluate_notes,
    f_measure,
    partial_bin_index,
    reference_kernel,
    smooth_threshold,
    tentogram,
    train_models,
    transcribe_file,
    transcribe_samples,
)

__all__ = [
    "HOP_SAMPLES",
    "NUM_BINS",
    "NUM_CENT_BINS",
    "NUM_PITCH_BINS",
    "SAMPLE_RATE",
    "analyze",
    "build_corpus",
    "combined_metric",
    "dct_index",
    "evaluate_notes",
    "f_measure",
    "partial_bin_index",
    "reference_kernel",
    "smooth_threshold",
    "tentogram",
    "train_models",
    "transcribe_file",
    "transcribe_samples",
]
