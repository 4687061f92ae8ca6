#!/usr/bin/env python
"""
Quick script to check that every nlcf module imports.
Used before long scenario sweeps.
"""

import importlib
import sys

MODULES = (
    ("nlcf.config", "Settings"),
    ("nlcf.exceptions", "NlcfError"),
    ("nlcf.schemas.kernel", "kernel_spec_adapter"),
    ("nlcf.schemas.shape", "shape_spec_adapter"),
    ("nlcf.schemas.scenario", "ScenarioConfig"),
    ("nlcf.schemas.reports", "FatteningReport"),
    ("nlcf.services.kernels", "kernel_service"),
    ("nlcf.services.quadrature", "adaptive_integrate"),
    ("nlcf.services.geometry", "geometry_service"),
    ("nlcf.services.curvature", "curvature_service"),
    ("nlcf.services.perimeter", "perimeter_service"),
    ("nlcf.services.grid_operator", "grid_operator"),
    ("nlcf.services.redistance", "redistance"),
    ("nlcf.services.flow", "flow_service"),
    ("nlcf.services.analysis", "analysis_service"),
    ("nlcf.services.barriers", "barrier_service"),
    ("nlcf.services.scenario_service", "scenario_service"),
    ("nlcf.services.rendering", "render_service"),
    ("nlcf.storage.trace_repository", "TraceRepository"),
    ("nlcf.main", "main"),
)


def check_imports() -> int:
    """Import every module and the name it must export."""
    errors = []
    for module, name in MODULES:
        print(f"Checking {module}...")
        try:
            loaded = importlib.import_module(module)
            if name is not None:
                getattr(loaded, name)
            print(f"✅ {module} OK")
        except Exception as e:
            errors.append(f"❌ {module}: {e}")

    print("\n" + "=" * 50)
    if errors:
        print("ERRORS FOUND:")
        for error in errors:
            print(error)
        return 1
    print("✅ ALL IMPORTS SUCCESSFUL!")
    return 0


if __name__ == "__main__":
    sys.exit(check_imports())
