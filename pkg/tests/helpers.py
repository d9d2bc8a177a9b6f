"""Shared utilities for the test suite: ball sampling and quadratic forms.

Nothing in here imports from the modules under test except through the
public package API, so these helpers stay usable as independent oracles.
"""

from __future__ import annotations

import numpy as np


def random_hermitian(rng, dim: int, scale: float = 1.0) -> np.ndarray:
    """Random dense Hermitian matrix (indefinite in general)."""
    G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * 0.5 * (G + G.conj().T)


def cn_vector(rng, dim: int) -> np.ndarray:
    """One CN(0, I) draw."""
    return (rng.standard_normal(dim) + 1j * rng.standard_normal(dim)) / np.sqrt(2.0)


def ball_points(rng, dim: int, xi: float, n: int, surface: float = 0.5) -> np.ndarray:
    """``n`` points of the complex ball ``||d|| <= xi``.

    A ``surface`` fraction sits exactly on the sphere (where non-interior
    extrema live); the rest is uniform over the ball volume.  The radius law
    u**(1/(2*dim)) accounts for the ball being 2*dim-dimensional over the
    reals.
    """
    d = rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    n_surf = int(n * surface)
    radii = np.empty(n)
    radii[:n_surf] = 1.0
    radii[n_surf:] = rng.random(n - n_surf) ** (1.0 / (2 * dim))
    return xi * radii[:, None] * d


def quad_forms(A: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Row-wise Hermitian quadratic values ``x^H A x``."""
    return np.einsum("ij,jk,ik->i", X.conj(), A, X).real


def stationary_family(A: np.ndarray, g: np.ndarray, xi: float, n: int = 96) -> np.ndarray:
    """Ball points along the trust-region stationarity manifold.

    For each sense the extremizer satisfies ``(sA + nu I) d = -sA g`` for some
    ``nu`` at or above the definiteness edge; sweeping ``nu`` over a log grid
    and clipping to the ball yields candidates that approach the true
    extremum much faster than uniform sampling.  Built only from ``(A, g,
    xi)`` via dense linear solves — no shared code with the oracle under
    test, which finds ``nu`` by secular-equation root finding instead.
    """
    A = np.asarray(A)
    scale = max(1.0, float(np.abs(np.linalg.eigvalsh(A)).max()))
    pts = [np.zeros_like(g)]
    for sgn in (+1.0, -1.0):
        M = sgn * A
        edge = max(0.0, -float(np.linalg.eigvalsh(M)[0]))
        hi_nu = 10.0 * scale + np.linalg.norm(M @ g) / max(xi, 1e-12)
        for nu in edge + np.geomspace(1e-10 * scale, hi_nu, n):
            try:
                d = np.linalg.solve(M + nu * np.eye(len(g)), -M @ g)
            except np.linalg.LinAlgError:
                continue
            nd = np.linalg.norm(d)
            if nd > xi:
                d = d * (xi / nd)
            pts.append(d)
    return np.array(pts)
