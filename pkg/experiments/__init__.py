"""Initial data, comparison experiments, audits and the run front ends."""
