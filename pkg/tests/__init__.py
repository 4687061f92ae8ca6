"""
Tests for nlcf.
"""
