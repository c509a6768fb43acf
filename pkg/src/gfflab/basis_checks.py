"""Deterministic integrity checks of the spherical-harmonic and Dirichlet eigenbasis.

Each check returns a :class:`BasisCheck` with the observed residual and the
tolerance it is held to. ``run_basis_checks`` bundles the battery that the
``basis`` command reports.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .harmonics import BasisSpec, get_basis, psi_all, radial_function
from .quadrature import SphereRule, ball_rule
from .geometry import Ball

PSI_GRAM_NMAX = {2: 16, 3: 8}
PSI_GRAM_TOL = 1e-10
E_GRAM_N = 8
E_GRAM_K = 8
E_GRAM_TOL = 1e-8
FD_STEP = 1e-3
FD_POINTS = 8
FD_TOL = 1e-3
ZERO_TOL = 1e-12
DIRICHLET_TOL = 1e-10
INTERLACE_N = 10


@dataclass(frozen=True)
class BasisCheck:
    name: str
    residual: float
    tolerance: float
    note: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)


def psi_gram_residual(d: int, n_max: int) -> float:
    """max |Gram - I| of {psi_{n,j}: n <= n_max} under the exact sphere rule of degree 2 n_max."""
    rule = SphereRule.build(d, 2 * n_max)
    P = np.concatenate(psi_all(n_max, rule.nodes, d), axis=0)
    gram = (P * rule.weights) @ P.T
    return float(np.max(np.abs(gram - np.eye(len(P)))))


def e_gram_residual(d: int, n_max: int = E_GRAM_N, k_max: int = E_GRAM_K) -> float:
    """max |Gram - I| of the eigenfunctions with n <= n_max, i <= k_max by polar volume quadrature."""
    basis = get_basis(BasisSpec(d, n_max, k_max))
    # Gauss-Legendre in r resolves the radial products, the sphere rule the angular ones
    n_radial = int(basis.alpha_max) + 40
    nodes, w = ball_rule(Ball.unit(d), n_radial, 2 * n_max + 2)
    E = basis.evaluate(nodes)
    gram = (E * w) @ E.T
    return float(np.max(np.abs(gram - np.eye(basis.size))))


def _laplacian(basis, z, h: float) -> np.ndarray:
    """Fourth-order central-difference Laplacian of every mode at z."""
    d = basis.dim
    shifts = [z]
    for k in range(d):
        e = np.eye(d)[k] * h
        shifts += [z + 2 * e, z + e, z - e, z - 2 * e]
    V = basis.evaluate(np.array(shifts))
    out = np.zeros(basis.size)
    for k in range(d):
        p2, p1, m1, m2 = V[:, 1 + 4 * k : 5 + 4 * k].T
        out += (-p2 + 16 * p1 - 30 * V[:, 0] + 16 * m1 - m2) / (12 * h * h)
    return out


def eigen_residual(spec: BasisSpec, seed: int = 0, points: int = FD_POINTS, h: float = FD_STEP) -> float:
    """max over modes of |Delta_h e + lambda e| / (lambda max_z |e(z)|) at random interior z."""
    basis = get_basis(spec)
    rng = np.random.default_rng(seed)
    d = spec.dim
    u = rng.normal(size=(points, d))
    zs = u / np.linalg.norm(u, axis=1, keepdims=True) * rng.uniform(0.1, 0.9, size=(points, 1))
    lam = basis.eigenvalues
    resid = np.zeros(basis.size)
    scale = np.zeros(basis.size)
    for z in zs:
        e = basis.evaluate(z[None])[:, 0]
        resid = np.maximum(resid, np.abs(_laplacian(basis, z, h) + lam * e))
        scale = np.maximum(scale, np.abs(e))
    return float(np.max(resid / (lam * scale)))


def zero_residual(spec: BasisSpec) -> float:
    """max |f_n(alpha_{n,i})| over the basis (J_n in d = 2, j_n in d = 3)."""
    basis = get_basis(spec)
    return float(max(np.max(np.abs(radial_function(n, a, spec.dim))) for n, a in enumerate(basis.alphas)))


def dirichlet_residual(spec: BasisSpec) -> float:
    """max |e(theta)| over the basis at boundary nodes."""
    basis = get_basis(spec)
    rule = SphereRule.build(spec.dim, 2 * spec.n_max + 2)
    return float(np.max(np.abs(basis.evaluate(rule.nodes))))


def interlacing_violations(d: int, n_max: int = INTERLACE_N, k: int = 2) -> int:
    """Count of failures of alpha_{n,1} < alpha_{n+1,1} < alpha_{n,2} for n <= n_max."""
    basis = get_basis(BasisSpec(d, n_max + 1, k))
    a = basis.alphas
    return sum(not (a[n][0] < a[n + 1][0] < a[n][1]) for n in range(n_max + 1))


def run_basis_checks(spec: BasisSpec, tolerances=None, seed: int = 0) -> list:
    tol = dict(tolerances or {})
    d = spec.dim
    n_psi = PSI_GRAM_NMAX[d]
    return [
        BasisCheck("psi Gram vs identity", psi_gram_residual(d, n_psi), tol.get("psi_gram", PSI_GRAM_TOL),
                   f"n <= {n_psi}, exact sphere rule"),
        BasisCheck("eigenfunction Gram vs identity", e_gram_residual(d), tol.get("e_gram", E_GRAM_TOL),
                   f"n <= {E_GRAM_N}, i <= {E_GRAM_K}, polar volume quadrature"),
        BasisCheck("eigen-equation finite-difference residual", eigen_residual(spec, seed),
                   tol.get("eigen_residual", FD_TOL),
                   f"relative, step {FD_STEP}, fourth-order stencil, {FD_POINTS} interior points"),
        BasisCheck("radial zero residual", zero_residual(spec), tol.get("zero_residual", ZERO_TOL)),
        BasisCheck("Dirichlet condition on the unit sphere", dirichlet_residual(spec),
                   tol.get("dirichlet", DIRICHLET_TOL)),
        BasisCheck("zero interlacing violations", float(interlacing_violations(d)), 0.0,
                   f"alpha_(n,1) < alpha_(n+1,1) < alpha_(n,2), n <= {INTERLACE_N}"),
    ]
