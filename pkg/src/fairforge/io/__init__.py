"""Persistence: checkpoints, datasets, bundles, folds and reports."""
