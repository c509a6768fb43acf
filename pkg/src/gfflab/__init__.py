"""Gaussian free field lab for the unit ball in d = 2, 3.

Modules: ``geometry`` (balls, Green's and Poisson kernels), ``harmonics``
(spherical harmonics, Bessel zeros, Dirichlet eigenbasis), ``sampler``
(spectral field samples), ``markov`` (domain Markov decomposition), ``wos``
(walk on spheres), ``suites`` (verification suites) and ``cli``.
"""
from .geometry import Ball, green_ball, green_unit_ball, poisson_kernel, scaling_s
from .harmonics import BasisSpec, eigenfunction, get_basis
from .sampler import field_model, sample_field

__version__ = "0.1.0"

__all__ = ["Ball", "BasisSpec", "eigenfunction", "field_model", "get_basis", "green_ball", "green_unit_ball",
           "poisson_kernel", "sample_field", "scaling_s", "__version__"]
