from . import acceptance, asymptotics, charsum, geometry, randzeros, spectra, storage

__all__ = ["geometry", "spectra", "asymptotics", "charsum", "randzeros", "acceptance", "storage"]
