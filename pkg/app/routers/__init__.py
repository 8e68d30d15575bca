from . import bulk, charsum, density, interface, report, zeros

__all__ = ["density", "bulk", "interface", "charsum", "zeros", "report"]
