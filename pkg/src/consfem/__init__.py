"""Conforming divergence-free-compatible finite elements on triangulations."""
