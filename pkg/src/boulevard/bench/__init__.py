"""Experiment bench: synthetic generators, CSV ingestion, cross-validation and experiment protocols."""
