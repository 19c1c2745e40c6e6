"""Monaural two-talker separation with confidence-thresholded masks.

A fully connected network maps windows of mixture magnitude spectrogram to
ideal-binary-mask estimates. Predictions from overlapping windows are
averaged per bin and thresholded at a confidence level alpha to build one
mask per talker.
"""

__version__ = "0.1.0"
