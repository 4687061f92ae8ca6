"""
nlcf - numerical laboratory for planar nonlocal curvature flows.

Лаборатория для K-кривизны, level-set эволюции и проверки барьеров.
"""

__version__ = "1.0.0"
