"""Tests for k3-monodromy."""
