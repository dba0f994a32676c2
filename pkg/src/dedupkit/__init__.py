"""Invoice deduplication: similarity features over blocked candidate pairs,
boosted trees and a small neural network, balanced and per-client
evaluation."""

__version__ = "0.1.0"
