"""
Tests для backend services.
"""
