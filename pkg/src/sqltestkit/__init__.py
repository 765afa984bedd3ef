"""Toolkit for reusing SQL test suites across database engines."""
