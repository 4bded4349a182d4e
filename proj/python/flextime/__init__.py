# Copyright 2026 The flextime Authors
# SPDX-License-Identifier: Apache-2.0
"""Frequency-band explanations for time-series classifiers."""

from ._flextime import (
    CallbackClassifier,
    Classifier,
    Filterbank,
    Model,
    NumericError,
    UnsupportedError,
    ValidationError,
    complexity,
    dynamask_freq,
    faithfulness,
    flextime,
    freqrise,
    generate,
    gradient,
    irfft,
    localization,
    rfft,
    stopband_comparison,
)

__all__ = [
    "CallbackClassifier",
    "Classifier",
    "Filterbank",
    "Model",
    "NumericError",
    "UnsupportedError",
    "ValidationError",
    "complexity",
    "dynamask_freq",
    "faithfulness",
    "flextime",
    "freqrise",
    "generate",
    "gradient",
    "irfft",
    "localization",
    "rfft",
    "stopband_comparison",
]
__version__ = "0.1.0"
