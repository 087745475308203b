"""Synthetic Raman spectra, airPLS baseline removal, wavelet and CNN denoisers."""

__version__ = "0.1.0"
