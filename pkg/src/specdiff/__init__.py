"""Spectral estimation of reflected-diffusion coefficients from
low-frequency observations, with a forward oracle and samplers that make
every step verifiable against known ground truth."""

__version__ = "0.1.0"
