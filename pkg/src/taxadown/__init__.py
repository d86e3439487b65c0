"""Taxonomic rolldown for camera-trap detections.

Takes detections that a species classifier left at a coarse taxonomic level
("animal", "mammal", "blank") and refines them toward species level by
clustering trusted high-confidence predictions in embedding space, training a
metric-learning projection, and scoring candidates against the resulting
cluster centroids. Ships with a review API for human-in-the-loop annotation.
"""

__version__ = "0.1.0"
