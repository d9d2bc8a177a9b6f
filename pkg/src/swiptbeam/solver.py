"""Self-contained primal-dual interior-point solver for conic programs.

Solves ``minimize c.x  s.t.  b - A x in K`` over products of zero, nonneg,
second-order and complex-Hermitian PSD cones, in the homogeneous self-dual
embedding

    A^T z + c tau = 0,   A x + s - b tau = 0,   kappa + c.x + b.z = 0,

so both optimality and infeasibility are detected by the same path-following
iteration: ``tau -> positive`` yields a primal-dual optimal pair, while a
converged ``kappa`` turns the iterate into a Farkas certificate.  Search
directions use Nesterov-Todd scaling with a Mehrotra predictor-corrector.

Linear algebra: one symmetric indefinite factorization per iteration (static
regularization 1e-9, one round of iterative refinement), dense throughout --
the KKT systems here are at most a few thousand rows.  Two interchangeable
backends solve the Newton system: a Schur-complement elimination of the slack
block (cheap, but its conditioning degrades like 1/mu^2 near the solution)
and the full augmented KKT matrix (costlier per iteration, conditioning
~1/mu).  Each direction's residual is measured against the unreduced Newton
equations; the solver starts on the cheap path and switches to the augmented
one the first time the measured residual exceeds a tolerance-tied threshold,
which in practice confines the expensive factorizations to the final one or
two iterations.  Everything is deterministic: no randomness, no
iteration-order ambiguity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import ldl, solve_triangular

from .cones import ConicProblem, PsdBlock, make_blocks, smat_many

__all__ = ["ConicSolution", "solve", "check_certificate"]

_REG = 1e-9  # static regularization of the KKT matrix
_STEP_FRAC = 0.99  # fraction-to-boundary
_MIN_STEP = 1e-10
_MAX_REFINE = 4  # direction refinements on the Schur path before switching


@dataclass(frozen=True)
class ConicSolution:
    """Solver outcome.

    For ``status == "optimal"`` the triple ``(x, s, z)`` is the de-homogenized
    primal-dual pair; ``gap`` is the absolute complementarity ``s.z`` and
    ``prim_res``/``dual_res`` are residual norms relative to ``1 + ||b||``
    resp. ``1 + ||c||``.  For ``status == "primal_infeasible"`` ``z`` is a
    Farkas certificate normalized to ``b.z = -1`` and ``dual_res`` holds
    ``||A^T z||``; for ``status == "dual_infeasible"`` ``(x, s)`` is an
    unbounded ray normalized to ``c.x = -1`` and ``prim_res`` holds
    ``||A x + s||``.  On ``max_iterations``/``numerical_error`` the best
    iterate seen so far is returned with its measures.
    """

    x: np.ndarray
    s: np.ndarray
    z: np.ndarray
    status: str
    gap: float
    prim_res: float
    dual_res: float
    iterations: int

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _LdlFactor:
    """LDL^T of a regularized KKT matrix with one refinement pass.

    Regularization is quasi-definite: ``+eps`` on the first ``nx`` rows
    (primal), ``-eps`` on the rest (dual); refinement corrects back toward
    the unregularized matrix.
    """

    def __init__(self, M: np.ndarray, nx: int):
        self.M = M
        reg = np.full(M.shape[0], _REG)
        reg[nx:] *= -1.0
        lu, d, perm = ldl(M + np.diag(reg), lower=True)
        self.L = np.ascontiguousarray(lu[perm])
        self.perm = perm
        diag = d.diagonal().copy()
        sub = np.nonzero(np.diagonal(d, 1))[0]  # 2x2 pivot start indices
        self.pairs = [(i, d[i, i], d[i + 1, i + 1], d[i + 1, i]) for i in sub]
        diag[sub] = 1.0  # placeholders; 2x2 pivots handled explicitly
        diag[sub + 1] = 1.0
        self.diag = diag

    def _dsolve(self, y: np.ndarray) -> np.ndarray:
        w = y / (self.diag[:, None] if y.ndim == 2 else self.diag)
        for i, a, b, o in self.pairs:
            det = a * b - o * o
            yi, yj = y[i], y[i + 1]
            w[i] = (b * yi - o * yj) / det
            w[i + 1] = (a * yj - o * yi) / det
        return w

    def _raw_solve(self, rhs: np.ndarray) -> np.ndarray:
        y = solve_triangular(
            self.L, rhs[self.perm], lower=True, unit_diagonal=True, check_finite=False
        )
        v = solve_triangular(
            self.L, self._dsolve(y), lower=True, unit_diagonal=True, trans="T",
            check_finite=False,
        )
        out = np.empty_like(v)
        out[self.perm] = v
        return out

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        x = self._raw_solve(rhs)
        x += self._raw_solve(rhs - self.M @ x)
        return x


class _Workspace:
    """Problem views and iteration state for one solve call."""

    def __init__(self, problem: ConicProblem):
        self.prob = problem
        self.c, self.A, self.b = problem.c, problem.A, problem.b
        self.n = problem.num_vars
        self.m = self.A.shape[0]
        cones = problem.cones
        self.nzero = cones.zero
        self.A0 = self.A[: self.nzero]
        self.b0 = self.b[: self.nzero]
        self.Ac = self.A[self.nzero :]
        self.bc = self.b[self.nzero :]
        self.blocks = make_blocks(cones)
        self.deg = cones.degree

        self.Ab, self.slices = [], []
        r = self.nzero
        for blk in self.blocks:
            self.slices.append(slice(r, r + blk.dim))
            self.Ab.append(np.ascontiguousarray(self.A[r : r + blk.dim]))
            r += blk.dim
        # constraint columns of PSD blocks as Hermitian matrices, built once
        self.mats = [
            smat_many(Abk.T) if isinstance(blk, PsdBlock) else None
            for blk, Abk in zip(self.blocks, self.Ab)
        ]

    def blockwise(self, op, vec: np.ndarray) -> np.ndarray:
        out = np.empty(self.m - self.nzero)
        r = 0
        for blk in self.blocks:
            out[r : r + blk.dim] = op(blk, vec[r : r + blk.dim])
            r += blk.dim
        return out

    def split_blocks(self, vec: np.ndarray) -> list[np.ndarray]:
        out, r = [], 0
        for blk in self.blocks:
            out.append(vec[r : r + blk.dim])
            r += blk.dim
        return out

    def f_inv(self, vec: np.ndarray) -> np.ndarray:
        """(W^T W)^{-1} applied to a cone-rows vector."""
        return self.blockwise(lambda blk, v: blk.whw_inv(v), vec)

    def build_schur(self, identity_scaling: bool = False) -> _LdlFactor:
        """Bordered Schur system [[Ac' F Ac, A0'], [A0, 0]], F = (W'W)^{-1}."""
        S = np.zeros((self.n, self.n))
        for blk, Abk, mats in zip(self.blocks, self.Ab, self.mats):
            if identity_scaling:
                S += Abk.T @ Abk
            elif mats is not None:
                S += blk.whw_inv_mats(mats) @ Abk
            else:
                S += Abk.T @ blk.whw_inv(Abk)
        if self.nzero:
            M = np.zeros((self.n + self.nzero,) * 2)
            M[: self.n, : self.n] = S
            M[: self.n, self.n :] = self.A0.T
            M[self.n :, : self.n] = self.A0
        else:
            M = S
        return _LdlFactor(M, self.n)

    def build_augmented(self) -> _LdlFactor:
        """Full KKT matrix [[0, A'], [A, -blockdiag(0, W'W)]]."""
        nm = self.n + self.m
        K = np.zeros((nm, nm))
        K[: self.n, self.n :] = self.A.T
        K[self.n :, : self.n] = self.A
        r = self.n + self.nzero
        for blk in self.blocks:
            K[r : r + blk.dim, r : r + blk.dim] = -blk.w2_matrix()
            r += blk.dim
        return _LdlFactor(K, self.n)


def solve(
    problem: ConicProblem,
    tol: float = 1e-8,
    max_iter: int = 200,
    verbose: bool = False,
) -> ConicSolution:
    """Solve a conic program to absolute gap / relative residual ``tol``.

    Statuses: ``optimal``, ``primal_infeasible``, ``dual_infeasible``,
    ``max_iterations``, ``numerical_error``.  Certificates are attached as
    described on :class:`ConicSolution`.  The call is deterministic: same
    problem data, same float output.
    """
    if not 1e-10 <= tol <= 1e-4:
        raise ValueError(f"tol {tol} outside supported range [1e-10, 1e-4]")
    w = _Workspace(problem)
    try:
        return _run(w, tol, max_iter, verbose)
    except (np.linalg.LinAlgError, ValueError):
        # Cholesky/LDL breakdown or non-finite intermediates near the boundary.
        return _best_effort(w, "numerical_error")


def _metrics(w: _Workspace):
    xh, sh, zh = w.x / w.tau, w.s / w.tau, w.z / w.tau
    pres = np.linalg.norm(w.A @ xh + sh - w.b) / (1.0 + np.linalg.norm(w.b))
    dres = np.linalg.norm(w.A.T @ zh + w.c) / (1.0 + np.linalg.norm(w.c))
    gap = float(sh @ zh)
    return xh, sh, zh, float(pres), float(dres), gap


def _best_effort(w: _Workspace, status: str) -> ConicSolution:
    best = getattr(w, "best", None)
    if best is None:
        zeros = np.zeros
        return ConicSolution(
            zeros(w.n), zeros(w.m), zeros(w.m), status, np.inf, np.inf, np.inf, 0
        )
    xh, sh, zh, pres, dres, gap, it = best
    return ConicSolution(xh, sh, zh, status, gap, pres, dres, it)


def _init_point(w: _Workspace) -> None:
    """conelp-style start: least-norm primal/dual pair shifted into the cone."""
    n, nzero = w.n, w.nzero
    kkt = w.build_schur(identity_scaling=True)
    rhs = np.zeros((n + nzero, 2))
    rhs[:n, 0] = w.Ac.T @ w.bc
    rhs[n:, 0] = w.b0
    rhs[:n, 1] = -w.c
    sol = kkt.solve(rhs)
    x = sol[:n, 0]
    s_c = w.bc - w.Ac @ x
    z = np.empty(w.m)
    z[:nzero] = sol[n:, 1]
    z[nzero:] = w.Ac @ sol[:n, 1]
    if w.blocks:
        e = np.concatenate([blk.identity() for blk in w.blocks])
        vp = min(
            blk.min_eig(v) for blk, v in zip(w.blocks, w.split_blocks(s_c))
        )
        if vp <= 1e-12:
            s_c = s_c + (1.0 - vp) * e
        vd = min(
            blk.min_eig(v) for blk, v in zip(w.blocks, w.split_blocks(z[nzero:]))
        )
        if vd <= 1e-12:
            z[nzero:] = z[nzero:] + (1.0 - vd) * e
    s = np.zeros(w.m)
    s[nzero:] = s_c
    w.x, w.z, w.s = x, z, s
    w.tau, w.kappa = 1.0, 1.0


def _run(w: _Workspace, tol: float, max_iter: int, verbose: bool) -> ConicSolution:
    n, m, nzero = w.n, w.m, w.nzero
    c, A, b = w.c, w.A, w.b
    norm_b, norm_c = np.linalg.norm(b), np.linalg.norm(c)
    switch_rel = max(1e-11, 0.01 * tol)

    _init_point(w)
    w.best = None
    w.use_aug = False
    best_merit = np.inf

    for it in range(max_iter):
        x, z, s, tau, kappa = w.x, w.z, w.s, w.tau, w.kappa

        # ---- residuals and stopping tests
        rd = A.T @ z + c * tau
        rp = A @ x + s - b * tau
        rg = kappa + c @ x + b @ z
        xh, sh, zh, pres, dres, gap = _metrics(w)
        merit = max(pres, dres, abs(gap))
        if merit < best_merit:
            best_merit = merit
            w.best = (xh, sh, zh, pres, dres, gap, it)
        if verbose:
            print(
                f"iter {it:3d}{'*' if w.use_aug else ' '} pobj {c @ xh:+.6e}  "
                f"gap {gap:.3e}  pres {pres:.3e}  dres {dres:.3e}  "
                f"tau {tau:.2e}  kappa {kappa:.2e}"
            )
        if pres <= tol and dres <= tol and gap <= tol:
            return ConicSolution(xh, sh, zh, "optimal", gap, pres, dres, it)
        bz = b @ z
        if bz < 0.0:
            zb = z / -bz
            cert = np.linalg.norm(A.T @ zb)
            if cert <= tol * (1.0 + norm_c):
                return ConicSolution(
                    x, s, zb, "primal_infeasible", -1.0, np.nan, float(cert), it
                )
        cx = c @ x
        if cx < 0.0:
            xb, sb = x / -cx, s / -cx
            cert = np.linalg.norm(A @ xb + sb)
            if cert <= tol * (1.0 + norm_b):
                return ConicSolution(
                    xb, sb, z, "dual_infeasible", -1.0, float(cert), np.nan, it
                )

        # ---- NT scaling at the current iterate
        lam_list = []
        try:
            for blk, sl in zip(w.blocks, w.slices):
                blk.compute_scaling(s[sl], z[sl])
                lam_list.append(blk.lam)
        except (ArithmeticError, np.linalg.LinAlgError):
            # an iterate crossed its cone boundary through round-off
            return _best_effort(w, "numerical_error")
        mu = (s @ z + tau * kappa) / (w.deg + 1)

        rp_c, rp_0 = rp[nzero:], rp[:nzero]
        state: dict = {}

        def get_backend(aug: bool):
            key = "aug" if aug else "schur"
            if key not in state:
                kkt = w.build_augmented() if aug else w.build_schur()
                if aug:
                    sol1 = kkt.solve(np.concatenate([-c, b]))
                    dx1, dz1 = sol1[:n], sol1[n:]
                else:
                    u1 = np.concatenate([-c + w.Ac.T @ w.f_inv(w.bc), w.b0])
                    sol1 = kkt.solve(u1)
                    dx1 = sol1[:n]
                    dz1 = np.concatenate(
                        [sol1[n:], w.f_inv(w.Ac @ dx1 - w.bc)]
                    )
                denom = c @ dx1 + b @ dz1 - kappa / tau
                state[key] = (kkt, dx1, dz1, denom)
            return state[key]

        def newton(q1, q2c, q20, q3, q4, q5, aug: bool):
            """One linearized-HSD solve with arbitrary right-hand sides.

            Equations: A'dz + c dtau = q1; A dx + ds - b dtau = q2 (ds = 0 on
            zero rows); c.dx + b.dz + dkappa = q3; lam o (W dz + W^{-T} ds)
            = q4 per cone block; kappa dtau + tau dkappa = q5.
            """
            kkt, dx1, dz1, denom = get_backend(aug)
            g1 = [blk.jordan_solve(q4b) for blk, q4b in zip(w.blocks, q4)]
            wg = (
                np.concatenate([blk.apply_WT(g) for blk, g in zip(w.blocks, g1)])
                if g1
                else np.zeros(0)
            )
            if aug:
                sol0 = kkt.solve(np.concatenate([q1, q20, q2c - wg]))
                dx0, dz0 = sol0[:n], sol0[n:]
            else:
                rhs_c = wg - q2c
                u0 = np.concatenate([q1 - w.Ac.T @ w.f_inv(rhs_c), q20])
                red = kkt.solve(u0)
                dx0 = red[:n]
                dz0 = np.concatenate([red[n:], w.f_inv(w.Ac @ dx0 + rhs_c)])
            dtau = float((q3 - q5 / tau - c @ dx0 - b @ dz0) / denom)
            dx = dx0 + dtau * dx1
            dz = dz0 + dtau * dz1
            dzc_blocks = w.split_blocks(dz[nzero:])
            dz_sc = [blk.apply_W(v) for blk, v in zip(w.blocks, dzc_blocks)]
            if aug:
                # recover ds directly from the primal equation (stable)
                ds_vec = q2c + w.bc * dtau - (A @ dx)[nzero:]
                ds_un = w.split_blocks(ds_vec)
                ds_sc = [blk.apply_WinvT(v) for blk, v in zip(w.blocks, ds_un)]
            else:
                ds_sc = [g1b - dzb for g1b, dzb in zip(g1, dz_sc)]
                ds_un = [blk.apply_WT(v) for blk, v in zip(w.blocks, ds_sc)]
            dkappa = (q5 - kappa * dtau) / tau
            return [dx, dz, ds_sc, dz_sc, ds_un, dtau, dkappa]

        def residual_of(cur, q1, q2c, q20, q3, q4, q5):
            dx, dz, ds_sc, dz_sc, ds_un, dtau, dkappa = cur
            ds_full = np.concatenate(ds_un) if ds_un else np.zeros(0)
            ax = A @ dx
            e1 = q1 - (A.T @ dz + c * dtau)
            e2c = q2c - (ax[nzero:] + ds_full - w.bc * dtau)
            e20 = q20 - (ax[:nzero] - w.b0 * dtau)
            e3 = q3 - (c @ dx + b @ dz + dkappa)
            e4 = [
                q4b - blk.jordan_mul(blk.lam, dzb + dsb)
                for blk, q4b, dzb, dsb in zip(w.blocks, q4, dz_sc, ds_sc)
            ]
            e5 = q5 - (kappa * dtau + tau * dkappa)
            en = np.sqrt(
                e1 @ e1
                + e2c @ e2c
                + e20 @ e20
                + e3 * e3
                + sum(v @ v for v in e4)
                + e5 * e5
            )
            return (e1, e2c, e20, e3, e4, e5), float(en)

        def direction(q1, q2c, q20, q3, q4, q5):
            """Newton solve; refine on the cheap path, escalate if it stalls."""
            qn = 1.0 + np.sqrt(
                q1 @ q1 + q2c @ q2c + q20 @ q20 + q3 * q3
                + sum(v @ v for v in q4) + q5 * q5
            )
            if not w.use_aug:
                cur = newton(q1, q2c, q20, q3, q4, q5, aug=False)
                en_prev = np.inf
                for k in range(_MAX_REFINE + 1):
                    e, en = residual_of(cur, q1, q2c, q20, q3, q4, q5)
                    if en <= 1e-13 * qn or en > 0.25 * en_prev or k == _MAX_REFINE:
                        break
                    en_prev = en
                    corr = newton(*e, aug=False)
                    cur = [
                        cur[0] + corr[0],
                        cur[1] + corr[1],
                        [u + v for u, v in zip(cur[2], corr[2])],
                        [u + v for u, v in zip(cur[3], corr[3])],
                        [u + v for u, v in zip(cur[4], corr[4])],
                        cur[5] + corr[5],
                        cur[6] + corr[6],
                    ]
                if en <= switch_rel * qn:
                    return cur
                w.use_aug = True  # conditioning outgrew the Schur path
            return newton(q1, q2c, q20, q3, q4, q5, aug=True)

        def boundary_step(ds_sc, dz_sc, dtau, dkappa) -> float:
            alpha = np.inf
            for blk, lamb, a_s, a_z in zip(w.blocks, lam_list, ds_sc, dz_sc):
                alpha = min(alpha, blk.max_step(lamb, a_s), blk.max_step(lamb, a_z))
            if dtau < 0.0:
                alpha = min(alpha, tau / -dtau)
            if dkappa < 0.0:
                alpha = min(alpha, kappa / -dkappa)
            return float(alpha)

        # ---- predictor
        q4_aff = [-blk.lam_sq() for blk in w.blocks]
        aff = direction(-rd, -rp_c, -rp_0, -rg, q4_aff, -tau * kappa)
        _, _, ds_sc_a, dz_sc_a, _, dtau_a, dkappa_a = aff
        a_aff = min(1.0, boundary_step(ds_sc_a, dz_sc_a, dtau_a, dkappa_a))
        ip = sum(
            (lamb + a_aff * dsb) @ (lamb + a_aff * dzb)
            for lamb, dsb, dzb in zip(lam_list, ds_sc_a, dz_sc_a)
        )
        mu_aff = (ip + (tau + a_aff * dtau_a) * (kappa + a_aff * dkappa_a)) / (
            w.deg + 1
        )
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))

        # ---- combined corrector step
        q4_comb = [
            sigma * mu * blk.identity() - blk.lam_sq() - blk.jordan_mul(dsb, dzb)
            for blk, dsb, dzb in zip(w.blocks, ds_sc_a, dz_sc_a)
        ]
        q5_comb = sigma * mu - tau * kappa - dtau_a * dkappa_a
        eta = 1.0 - sigma
        comb = direction(-eta * rd, -eta * rp_c, -eta * rp_0, -eta * rg, q4_comb, q5_comb)
        dx_c, dz_c, ds_sc_c, dz_sc_c, ds_un_c, dtau_c, dkappa_c = comb
        alpha = min(1.0, _STEP_FRAC * boundary_step(ds_sc_c, dz_sc_c, dtau_c, dkappa_c))
        if verbose:
            print(
                f"        a_aff {a_aff:.4e}  sigma {sigma:.4e}  mu {mu:.4e}  "
                f"alpha {alpha:.4e}"
            )
        if not np.isfinite(alpha) or alpha <= _MIN_STEP:
            return _best_effort(w, "numerical_error")

        w.x = x + alpha * dx_c
        w.z = z + alpha * dz_c
        s_new = s.copy()
        for sl, dsb in zip(w.slices, ds_un_c):
            s_new[sl] = s[sl] + alpha * dsb
        w.s = s_new
        w.tau = tau + alpha * dtau_c
        w.kappa = kappa + alpha * dkappa_c
        if not np.isfinite(w.x).all() or w.tau <= 0.0 or w.kappa <= 0.0:
            return _best_effort(w, "numerical_error")

    return _best_effort(w, "max_iterations")


def check_certificate(problem: ConicProblem, sol: ConicSolution) -> dict[str, float]:
    """Recompute, from scratch, the quantities that justify a solver status.

    Returns named residuals/margins; cone margins are signed minimum
    eigenvalues (nonnegative means inside the cone).  Used by tests instead
    of trusting solver-internal values, and for auditing foreign solutions.
    """
    A, b, c, cones = problem.A, problem.b, problem.c, problem.cones
    blocks = make_blocks(cones)

    def cone_margin(vec_full: np.ndarray) -> float:
        r = cones.zero
        worst = np.inf
        for blk in blocks:
            worst = min(worst, blk.min_eig(vec_full[r : r + blk.dim]))
            r += blk.dim
        return float(worst)

    out: dict[str, float] = {}
    if sol.status == "optimal":
        out["prim_res"] = float(
            np.linalg.norm(A @ sol.x + sol.s - b) / (1.0 + np.linalg.norm(b))
        )
        out["dual_res"] = float(
            np.linalg.norm(A.T @ sol.z + c) / (1.0 + np.linalg.norm(c))
        )
        out["gap"] = float(sol.s @ sol.z)
        out["pobj"] = float(c @ sol.x)
        out["dobj"] = float(-b @ sol.z)
        out["s_margin"] = cone_margin(sol.s)
        out["z_margin"] = cone_margin(sol.z)
        out["s_zero_rows"] = float(np.abs(sol.s[: cones.zero]).max(initial=0.0))
    elif sol.status == "primal_infeasible":
        out["bz"] = float(b @ sol.z)  # normalized to -1
        out["cert_res"] = float(np.linalg.norm(A.T @ sol.z))
        out["z_margin"] = cone_margin(sol.z)
    elif sol.status == "dual_infeasible":
        out["cx"] = float(c @ sol.x)  # normalized to -1
        out["cert_res"] = float(np.linalg.norm(A @ sol.x + sol.s))
        out["s_margin"] = cone_margin(sol.s)
        out["s_zero_rows"] = float(np.abs(sol.s[: cones.zero]).max(initial=0.0))
    return out
