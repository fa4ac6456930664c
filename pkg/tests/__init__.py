"""Tests for Atmosphere Agents."""
