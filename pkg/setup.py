"""Packaging for the nlcf command-line laboratory."""

from pathlib import Path

from setuptools import find_packages, setup

RUNTIME = ("numpy", "scipy", "scikit-image", "matplotlib", "pydantic", "pydantic-settings", "structlog")


def requirements() -> list[str]:
    lines = Path(__file__).with_name("requirements.txt").read_text(encoding="utf-8").splitlines()
    pinned = [line.strip() for line in lines if line.strip() and not line.startswith("#")]
    return [line for line in pinned if line.split("==")[0] in RUNTIME]


setup(
    name="nlcf",
    version="1.0.0",
    description="Numerical laboratory for planar nonlocal curvature flows",
    packages=find_packages(include=["nlcf", "nlcf.*"]),
    python_requires=">=3.10",
    install_requires=requirements(),
    entry_points={"console_scripts": ["nlcf=nlcf.main:main"]},
)
