"""Bias probes and preprocessing for grayscale radiograph corpora.

Stage 1 measures how easily a classifier can tell *which dataset* an image
came from (t-SNE + SVM on raw pixels, and a tiny CNN with Grad-CAM). Stage 2
masks images with lung segmentations and applies intensity augmentations
that are meant to remove those shortcuts.
"""

__version__ = "0.1.0"
