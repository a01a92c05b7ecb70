"""Tests for patchforge."""
