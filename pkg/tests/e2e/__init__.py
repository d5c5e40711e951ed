"""End-to-end tests for the protocol evaluate service."""
