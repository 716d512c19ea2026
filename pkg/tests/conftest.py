"""Shared generators for randomized suites (seeded, reproducible)."""

from __future__ import annotations

import numpy as np

from convrate import SystemModel, spectral_radius


def random_stable_matrix(rng: np.random.Generator, n: int,
                         max_radius: float = 0.9) -> np.ndarray:
    """Random matrix rescaled to a spectral radius uniform in (0.1, max_radius]."""
    while True:
        M = rng.standard_normal((n, n))
        radius = spectral_radius(M)
        if radius > 1e-9:
            target = rng.uniform(0.1, max_radius)
            return M * (target / radius)


def random_spd(rng: np.random.Generator, n: int) -> np.ndarray:
    B = rng.standard_normal((n, n))
    return B @ B.T + 0.1 * np.eye(n)


def two_mode_system(rng: np.random.Generator, n: int | None = None,
                    perturbation: float = 1.0,
                    disturbance_bound: float | None = None,
                    cost_weight: np.ndarray | None = None) -> SystemModel:
    """Schur-stable nominal mode plus a random (possibly unstable) skip mode."""
    if n is None:
        n = int(rng.integers(2, 5))
    A0 = random_stable_matrix(rng, n)
    A1 = A0 + perturbation * rng.standard_normal((n, n)) / np.sqrt(n)
    return SystemModel(modes={0: A0, 1: A1}, disturbance_bound=disturbance_bound,
                       cost_weight=cost_weight)


def valid_rho_for(A0: np.ndarray, rng: np.random.Generator) -> float:
    """A decay rate strictly between the spectral radius and one."""
    radius = spectral_radius(A0)
    return radius + (1.0 - radius) * rng.uniform(0.3, 0.8)
