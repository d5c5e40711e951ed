"""Pseudo-spectral solver for the low-stratification Euler system and its soundproof approximations."""
