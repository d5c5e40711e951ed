"""Experiment run API."""
