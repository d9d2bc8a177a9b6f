"""Symmetric-cone geometry for the interior-point engine.

The engine works over products of four cone types: a zero cone (equality
rows), the nonnegative orthant, second-order cones and PSD cones of complex
Hermitian matrices.  Hermitian blocks are stored in a real "svec" coordinate
vector of length ``p**2``: the ``p`` diagonal entries followed by
``sqrt(2) * (Re, Im)`` pairs of the strict upper triangle (row-major), which
makes the Euclidean inner product of two svecs equal ``trace(M N)``.  Complex
blocks are handled natively -- no doubling into real symmetric matrices -- so
a side-``p`` block contributes barrier degree ``p``.

Each block class knows its Nesterov-Todd scaling, Jordan-algebra products,
and boundary step sizes; the solver composes them without caring which cone
it is talking to.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "ConeSpec",
    "ConicProblem",
    "svec_side",
    "svec",
    "smat",
    "svec_many",
    "smat_many",
    "make_blocks",
    "write_problem",
    "read_problem",
]

_SQRT2 = np.sqrt(2.0)


@lru_cache(maxsize=None)
def _svec_index(p: int):
    iu = np.triu_indices(p, k=1)
    return iu[0], iu[1]


@lru_cache(maxsize=None)
def _smat_basis(p: int) -> np.ndarray:
    """Hermitian basis matrices of the svec coordinates, stacked (p*p, p, p)."""
    return smat_many(np.eye(p * p))


def svec_side(length: int) -> int:
    """Side of the Hermitian block a length-``p**2`` svec describes."""
    p = int(round(np.sqrt(length)))
    if p * p != length:
        raise ValueError(f"svec length {length} is not a perfect square")
    return p


def svec(M: np.ndarray) -> np.ndarray:
    """Hermitian matrix -> real coordinate vector (length ``p**2``)."""
    p = M.shape[0]
    i, j = _svec_index(p)
    v = np.empty(p * p)
    v[:p] = M.diagonal().real
    off = M[i, j] * _SQRT2
    v[p::2] = off.real
    v[p + 1 :: 2] = off.imag
    return v


def smat(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`svec`; always returns an exactly Hermitian matrix."""
    p = svec_side(v.shape[0])
    i, j = _svec_index(p)
    M = np.zeros((p, p), dtype=np.complex128)
    M[np.arange(p), np.arange(p)] = v[:p]
    off = (v[p::2] + 1j * v[p + 1 :: 2]) / _SQRT2
    M[i, j] = off
    M[j, i] = off.conj()
    return M


def smat_many(V: np.ndarray) -> np.ndarray:
    """Rows of ``V`` (shape ``(n, p*p)``) -> stacked Hermitian matrices."""
    n, length = V.shape
    p = svec_side(length)
    i, j = _svec_index(p)
    M = np.zeros((n, p, p), dtype=np.complex128)
    M[:, np.arange(p), np.arange(p)] = V[:, :p]
    off = (V[:, p::2] + 1j * V[:, p + 1 :: 2]) / _SQRT2
    M[:, i, j] = off
    M[:, j, i] = off.conj()
    return M


def svec_many(M: np.ndarray) -> np.ndarray:
    """Stacked Hermitian matrices ``(n, p, p)`` -> rows of svec coordinates."""
    n, p, _ = M.shape
    i, j = _svec_index(p)
    V = np.empty((n, p * p))
    V[:, :p] = M[:, np.arange(p), np.arange(p)].real
    off = M[:, i, j] * _SQRT2
    V[:, p::2] = off.real
    V[:, p + 1 :: 2] = off.imag
    return V


@dataclass(frozen=True)
class ConeSpec:
    """Ordered cone product: zero rows, nonnegative rows, SOC blocks, PSD blocks.

    ``psd`` holds complex Hermitian side lengths; each contributes ``side**2``
    rows.  Constraint rows of a problem must be laid out in exactly this order.
    """

    zero: int = 0
    nonneg: int = 0
    soc: tuple[int, ...] = ()
    psd: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "soc", tuple(int(q) for q in self.soc))
        object.__setattr__(self, "psd", tuple(int(p) for p in self.psd))
        if self.zero < 0 or self.nonneg < 0:
            raise ValueError("cone dimensions must be nonnegative")
        if any(q < 2 for q in self.soc):
            raise ValueError("SOC blocks need dimension >= 2")
        if any(p < 1 for p in self.psd):
            raise ValueError("PSD blocks need side >= 1")

    @property
    def total_rows(self) -> int:
        return self.zero + self.nonneg + sum(self.soc) + sum(p * p for p in self.psd)

    @property
    def cone_rows(self) -> int:
        return self.total_rows - self.zero

    @property
    def degree(self) -> int:
        """Barrier degree: drives the central-path parameter."""
        return self.nonneg + len(self.soc) + sum(self.psd)


@dataclass(frozen=True)
class ConicProblem:
    """``minimize c.x  subject to  b - A x in K`` with ``K`` a :class:`ConeSpec`."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    cones: ConeSpec
    layout: Any = None

    def __post_init__(self):
        c = np.ascontiguousarray(self.c, dtype=np.float64)
        A = np.ascontiguousarray(self.A, dtype=np.float64)
        b = np.ascontiguousarray(self.b, dtype=np.float64)
        if A.ndim != 2 or c.ndim != 1 or b.ndim != 1:
            raise ValueError("A must be a matrix, b and c vectors")
        m, n = A.shape
        if c.shape[0] != n or b.shape[0] != m:
            raise ValueError(f"shape mismatch: A is {A.shape}, c {c.shape}, b {b.shape}")
        if m != self.cones.total_rows:
            raise ValueError(
                f"A has {m} rows but the cone product needs {self.cones.total_rows}"
            )
        if not (np.isfinite(A).all() and np.isfinite(b).all() and np.isfinite(c).all()):
            raise ValueError("problem data must be finite")
        for name, arr in (("c", c), ("A", A), ("b", b)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def num_vars(self) -> int:
        return self.A.shape[1]


# ---------------------------------------------------------------------------
# scaling blocks


class NonnegBlock:
    """Elementwise cone; NT scaling is the diagonal sqrt(s/z)."""

    def __init__(self, dim: int):
        self.dim = dim
        self.degree = dim

    def identity(self) -> np.ndarray:
        return np.ones(self.dim)

    def min_eig(self, u: np.ndarray) -> float:
        return float(u.min())

    def compute_scaling(self, s: np.ndarray, z: np.ndarray) -> None:
        self.w = np.sqrt(s / z)
        self.lam = np.sqrt(s * z)
        self._d_inv = z / s

    def apply_W(self, u):  # W z
        return u * self.w

    def apply_WT(self, u):
        return u * self.w

    def apply_WinvT(self, u):
        return u / self.w

    def whw_inv(self, U):  # (W^T W)^{-1} columns
        return U * (self._d_inv if U.ndim == 1 else self._d_inv[:, None])

    def w2_matrix(self) -> np.ndarray:
        """Dense W^T W, for the augmented KKT assembly."""
        return np.diag(self.w * self.w)

    def jordan_mul(self, a, b):
        return a * b

    def jordan_solve(self, d):  # lam o u = d
        return d / self.lam

    def lam_sq(self):
        return self.lam * self.lam

    def max_step(self, u, du) -> float:
        neg = du < 0
        if not neg.any():
            return np.inf
        return float((u[neg] / -du[neg]).min())


class SocBlock:
    """Second-order cone ``{u : u[0] >= ||u[1:]||}`` of dimension >= 2."""

    def __init__(self, dim: int):
        self.dim = dim
        self.degree = 1

    def identity(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[0] = 1.0
        return e

    def min_eig(self, u: np.ndarray) -> float:
        return float(u[0] - np.linalg.norm(u[1:]))

    def compute_scaling(self, s: np.ndarray, z: np.ndarray) -> None:
        rs2 = s[0] ** 2 - s[1:] @ s[1:]
        rz2 = z[0] ** 2 - z[1:] @ z[1:]
        if rs2 <= 0.0 or rz2 <= 0.0:
            # only reachable when round-off pushed an iterate across the
            # boundary; the caller turns this into a numerical-error status
            raise ArithmeticError("iterate left the second-order cone")
        rs, rz = np.sqrt(rs2), np.sqrt(rz2)
        sb, zb = s / rs, z / rz
        # gamma normalizes wb to the unit hyperboloid: wb' J wb = 1.
        gamma = np.sqrt(0.5 * (1.0 + sb @ zb))
        wb = np.empty(self.dim)
        wb[0] = (sb[0] + zb[0]) / (2.0 * gamma)
        wb[1:] = (sb[1:] - zb[1:]) / (2.0 * gamma)
        eta = np.sqrt(rs / rz)
        T = np.empty((self.dim, self.dim))
        T[0, 0] = wb[0]
        T[0, 1:] = wb[1:]
        T[1:, 0] = wb[1:]
        T[1:, 1:] = np.eye(self.dim - 1) + np.outer(wb[1:], wb[1:]) / (1.0 + wb[0])
        self.W = eta * T
        # T is hyperbolic-orthogonal: T^{-1} = J T J with J = diag(1, -I).
        Tinv = T.copy()
        Tinv[0, 1:] *= -1.0
        Tinv[1:, 0] *= -1.0
        self.Winv = Tinv / eta
        self._wi2 = self.Winv @ self.Winv
        self.lam = self.W @ z

    def apply_W(self, u):
        return self.W @ u

    def apply_WT(self, u):
        return self.W @ u

    def apply_WinvT(self, u):
        return self.Winv @ u

    def whw_inv(self, U):
        return self._wi2 @ U

    def w2_matrix(self) -> np.ndarray:
        return self.W @ self.W

    def jordan_mul(self, a, b):
        out = np.empty(self.dim)
        out[0] = a @ b
        out[1:] = a[0] * b[1:] + b[0] * a[1:]
        return out

    def jordan_solve(self, d):
        lam = self.lam
        det = lam[0] ** 2 - lam[1:] @ lam[1:]
        u = np.empty(self.dim)
        u[0] = (lam[0] * d[0] - lam[1:] @ d[1:]) / det
        u[1:] = (d[1:] - u[0] * lam[1:]) / lam[0]
        return u

    def lam_sq(self):
        return self.jordan_mul(self.lam, self.lam)

    def max_step(self, u, du) -> float:
        # First alpha where det(u + alpha du) hits zero from c > 0.
        a = du[0] ** 2 - du[1:] @ du[1:]
        b = 2.0 * (u[0] * du[0] - u[1:] @ du[1:])
        c = u[0] ** 2 - u[1:] @ u[1:]
        roots: list[float] = []
        if abs(a) < 1e-300:
            if b < 0.0:
                roots.append(-c / b)
        else:
            disc = b * b - 4.0 * a * c
            if disc >= 0.0:
                sq = np.sqrt(disc)
                q = -0.5 * (b + sq) if b >= 0.0 else -0.5 * (b - sq)
                if q != 0.0:
                    roots.extend([q / a, c / q])
        pos = [r for r in roots if r > 0.0]
        if du[0] < 0.0:  # u[0] itself may hit zero first along the ray
            pos.append(u[0] / -du[0])
        return float(min(pos)) if pos else np.inf


class PsdBlock:
    """Complex Hermitian PSD cone of side ``p`` in svec coordinates."""

    def __init__(self, side: int):
        self.side = side
        self.dim = side * side
        self.degree = side

    def identity(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[: self.side] = 1.0
        return e

    def min_eig(self, u: np.ndarray) -> float:
        return float(np.linalg.eigvalsh(smat(u))[0])

    def compute_scaling(self, s: np.ndarray, z: np.ndarray) -> None:
        S, Z = smat(s), smat(z)
        Ls = np.linalg.cholesky(S)
        Lz = np.linalg.cholesky(Z)
        U, sig, Vh = np.linalg.svd(Lz.conj().T @ Ls)
        sq = np.sqrt(sig)
        self.R = Ls @ (Vh.conj().T / sq)
        Ls_inv = solve_triangular(Ls, np.eye(self.side), lower=True, check_finite=False)
        self.Rinv = (sq[:, None] * Vh) @ Ls_inv
        self.lam_diag = sig  # scaled point is diag(sig)
        G = self.R @ self.R.conj().T
        self._Gi = self.Rinv.conj().T @ self.Rinv
        self._G = G
        lam = np.zeros(self.dim)
        lam[: self.side] = sig
        self.lam = lam
        self._lam_pair = sig[:, None] + sig[None, :]

    def apply_W(self, u):  # svec(R^H U R)
        return svec(self.R.conj().T @ smat(u) @ self.R)

    def apply_WT(self, u):  # svec(R U R^H)
        return svec(self.R @ smat(u) @ self.R.conj().T)

    def apply_WinvT(self, u):
        return svec(self.Rinv @ smat(u) @ self.Rinv.conj().T)

    def w2_matrix(self) -> np.ndarray:
        """Matrix of M -> G M G over svec coordinates (self-adjoint, so symmetric)."""
        return svec_many(self._G @ _smat_basis(self.side) @ self._G)

    def whw_inv(self, U):
        """(W^T W)^{-1} columnwise: M -> G^{-1} M G^{-1} with G = R R^H."""
        if U.ndim == 1:
            return svec(self._Gi @ smat(U) @ self._Gi)
        mats = smat_many(U.T)
        return svec_many(self._Gi @ mats @ self._Gi).T

    def whw_inv_mats(self, mats: np.ndarray) -> np.ndarray:
        """Batched form for pre-cached constraint columns ``(n, p, p)``."""
        return svec_many(self._Gi @ mats @ self._Gi)

    def jordan_mul(self, a, b):
        A, B = smat(a), smat(b)
        return svec(0.5 * (A @ B + B @ A))

    def jordan_solve(self, d):
        # lam is diagonal after NT scaling, so the Sylvester solve is entrywise.
        return svec(smat(d) * (2.0 / self._lam_pair))

    def lam_sq(self):
        v = np.zeros(self.dim)
        v[: self.side] = self.lam_diag**2
        return v

    def max_step(self, u, du) -> float:
        """Boundary step from a *diagonal* scaled point ``u`` (the NT lambda)."""
        d = u[: self.side]
        M = smat(du) / np.sqrt(np.outer(d, d))
        w = float(np.linalg.eigvalsh(M)[0])
        return np.inf if w >= 0.0 else -1.0 / w


def make_blocks(cones: ConeSpec) -> list:
    """Instantiate scaling blocks for the non-equality part of the cone."""
    blocks: list = []
    if cones.nonneg:
        blocks.append(NonnegBlock(cones.nonneg))
    for q in cones.soc:
        blocks.append(SocBlock(q))
    for p in cones.psd:
        blocks.append(PsdBlock(p))
    return blocks


# ---------------------------------------------------------------------------
# plain-text exchange format


def write_problem(problem: ConicProblem, path) -> None:
    """Dump a problem as text: a cone header plus COO triplets.

    Line 1: ``n m zero nonneg``; line 2: SOC dims; line 3: PSD sides (blank
    lines when empty).  Then ``c <i> <val>``, ``b <i> <val>`` and
    ``A <i> <j> <val>`` entries for all nonzeros, full float precision.
    """
    lines = [
        f"{problem.num_vars} {problem.A.shape[0]} {problem.cones.zero} {problem.cones.nonneg}",
        " ".join(map(str, problem.cones.soc)),
        " ".join(map(str, problem.cones.psd)),
    ]
    # plain-float repr round-trips exactly and stays parseable across numpy
    # versions (numpy scalars repr as "np.float64(...)" on 2.x)
    for i in np.nonzero(problem.c)[0]:
        lines.append(f"c {i} {float(problem.c[i])!r}")
    for i in np.nonzero(problem.b)[0]:
        lines.append(f"b {i} {float(problem.b[i])!r}")
    for i, j in zip(*np.nonzero(problem.A)):
        lines.append(f"A {i} {j} {float(problem.A[i, j])!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_problem(path) -> ConicProblem:
    """Inverse of :func:`write_problem` (layout metadata is not preserved)."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    n, m, zero, nonneg = map(int, lines[0].split())
    soc = tuple(map(int, lines[1].split())) if lines[1].strip() else ()
    psd = tuple(map(int, lines[2].split())) if lines[2].strip() else ()
    c = np.zeros(n)
    b = np.zeros(m)
    A = np.zeros((m, n))
    for line in lines[3:]:
        if not line.strip():
            continue
        parts = line.split()
        if parts[0] == "c":
            c[int(parts[1])] = float(parts[2])
        elif parts[0] == "b":
            b[int(parts[1])] = float(parts[2])
        elif parts[0] == "A":
            A[int(parts[1]), int(parts[2])] = float(parts[3])
        else:
            raise ValueError(f"unrecognized record {parts[0]!r}")
    return ConicProblem(c=c, A=A, b=b, cones=ConeSpec(zero, nonneg, soc, psd))
