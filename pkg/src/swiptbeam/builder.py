"""Assembly of the fixed-leakage transmit-design subproblem in conic form.

For a fixed leakage cap ``beta`` the joint beamformer / artificial-noise /
power-split design becomes convex after the usual semidefinite relaxation:
the rank constraint on the signal covariance is dropped, the power-split
ratio ``rho`` is replaced by ``t = 1/rho``, and each CSI-error-ball
constraint turns into a single linear matrix inequality through the
S-procedure.  This module builds that problem in the standard primal form
``minimize c.x  s.t.  b - A x in K`` consumed by :mod:`swiptbeam.solver`.

Variables are stacked as ``[svec(W), svec(Sigma), t, tau, omega.., mu..,
delta..]`` (see :class:`VariableLayout`); ``tau`` is the harvested-energy
floor being maximized and omega/mu/delta are the S-procedure multipliers of
the leakage, harvesting and interference balls.  A radius-0 ball needs no
multiplier — its constraint degenerates to the nominal scalar inequality —
so such entries get a plain nonnegative row instead of a PSD block and
their multiplier is dropped from the variable vector.  (Keeping a
multiplier without the ``-xi^2`` corner term would leave the optimal face
unbounded, which an interior-point method cannot tolerate.)  Hermitian
blocks travel in the real ``svec`` coordinates of :mod:`swiptbeam.cones`,
so ``Tr(A B) == svec(A) @ svec(B)`` and the complex structure needs no
realification.

Constraint rows are emitted in the solver's cone order (nonneg, SOC, PSD):

* multiplier nonnegativity (omega, mu, delta — ball entries only),
  ``t >= 1 + eps_t``, the secrecy-margin row coupling the secondary SINR to
  ``beta``, the transmit power budget, then the nominal scalar rows of any
  radius-0 entries (leakage, interference, harvested energy, in that order);
* one 3-dimensional second-order cone encoding the splitter energy floor
  ``u * (t - 1) >= psi_s / eta`` (hyperbolic constraint);
* PSD blocks: ``W``, ``Sigma``, then one side-``nt+1`` block per positive-
  radius ball: worst-case leakage cap per idle receiver, worst-case
  interference per primary user, worst-case harvested energy per idle
  receiver (the only rows containing ``tau``).

Building is pure and bitwise reproducible; building a grid of ``beta``
values concurrently is the intended use.  ``cones.write_problem`` dumps any
built instance to a plain-text format for cross-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cones import ConeSpec, ConicProblem, _smat_basis, smat, svec, svec_many
from .model import ChannelSet, SystemParams
from .solver import ConicSolution

__all__ = ["VariableLayout", "beta_bounds", "build_p4", "map_solution"]


@dataclass(frozen=True)
class VariableLayout:
    """Index map into the stacked real decision vector.

    The order is pinned: ``svec(W)`` then ``svec(Sigma)`` (each ``nt**2``
    reals), the scalars ``t`` and ``tau``, then the multipliers of the balls
    that actually have one (``ehr_active[k]``/``pu_active[i]`` False marks a
    radius-0 ball whose multiplier is dropped): omega for the active idle
    receivers, mu likewise, delta for the active primary users.
    ``split``/``join`` realize the documented embed/extract round trip;
    ``split`` pads dropped multipliers with 0.0 so callers always see
    full-length ``omega``/``mu``/``delta`` arrays.
    """

    nt: int
    num_ehr: int
    num_pu: int
    ehr_active: tuple[bool, ...] = ()
    pu_active: tuple[bool, ...] = ()

    def __post_init__(self):
        if not self.ehr_active:
            object.__setattr__(self, "ehr_active", (True,) * self.num_ehr)
        if not self.pu_active and self.num_pu:
            object.__setattr__(self, "pu_active", (True,) * self.num_pu)
        if len(self.ehr_active) != self.num_ehr or len(self.pu_active) != self.num_pu:
            raise ValueError("active masks must match receiver counts")

    @property
    def mat_len(self) -> int:
        """Real coordinates per Hermitian ``nt x nt`` block."""
        return self.nt * self.nt

    @property
    def n_ehr_mult(self) -> int:
        return sum(self.ehr_active)

    @property
    def n_pu_mult(self) -> int:
        return sum(self.pu_active)

    @property
    def w(self) -> slice:
        return slice(0, self.mat_len)

    @property
    def sigma(self) -> slice:
        return slice(self.mat_len, 2 * self.mat_len)

    @property
    def t(self) -> int:
        return 2 * self.mat_len

    @property
    def tau(self) -> int:
        return 2 * self.mat_len + 1

    @property
    def omega(self) -> slice:
        base = 2 * self.mat_len + 2
        return slice(base, base + self.n_ehr_mult)

    @property
    def mu(self) -> slice:
        base = 2 * self.mat_len + 2 + self.n_ehr_mult
        return slice(base, base + self.n_ehr_mult)

    @property
    def delta(self) -> slice:
        base = 2 * self.mat_len + 2 + 2 * self.n_ehr_mult
        return slice(base, base + self.n_pu_mult)

    @property
    def num_vars(self) -> int:
        return 2 * self.mat_len + 2 + 2 * self.n_ehr_mult + self.n_pu_mult

    def _pad(self, vals: np.ndarray, active: tuple[bool, ...]) -> np.ndarray:
        full = np.zeros(len(active))
        full[np.asarray(active, dtype=bool)] = vals
        return full

    def split(self, x: np.ndarray):
        """Vector -> ``(W, Sigma, t, tau, omega, mu, delta)`` (multipliers padded)."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.num_vars,):
            raise ValueError(f"x must have shape ({self.num_vars},), got {x.shape}")
        return (
            smat(x[self.w]),
            smat(x[self.sigma]),
            float(x[self.t]),
            float(x[self.tau]),
            self._pad(x[self.omega], self.ehr_active),
            self._pad(x[self.mu], self.ehr_active),
            self._pad(x[self.delta], self.pu_active),
        )

    def join(self, W, Sigma, t, tau, omega, mu, delta) -> np.ndarray:
        """Inverse of :meth:`split` (entries of dropped multipliers are ignored)."""
        ehr_mask = np.asarray(self.ehr_active, dtype=bool)
        pu_mask = np.asarray(self.pu_active, dtype=bool)
        x = np.empty(self.num_vars)
        x[self.w] = svec(np.asarray(W, dtype=np.complex128))
        x[self.sigma] = svec(np.asarray(Sigma, dtype=np.complex128))
        x[self.t] = t
        x[self.tau] = tau
        x[self.omega] = np.asarray(omega, dtype=np.float64)[ehr_mask]
        x[self.mu] = np.asarray(mu, dtype=np.float64)[ehr_mask]
        x[self.delta] = np.asarray(delta, dtype=np.float64)[pu_mask]
        return x


def beta_bounds(params: SystemParams, h: np.ndarray) -> list[float]:
    """Search interval for the leakage cap ``beta``.

    The lower end is the no-leakage limit ``beta = 1``; the upper end is the
    cap reached when the whole power budget is beamed at the secondary
    receiver, ``1 + p_th * ||h||^2 / sigma_sp2``.
    """
    h = np.asarray(h, dtype=np.complex128)
    gain = float(np.vdot(h, h).real)
    return [1.0, 1.0 + params.p_th * gain / params.sigma_sp2]


def _bordered(basis: np.ndarray, g: np.ndarray) -> np.ndarray:
    """svec rows of ``B_v -> [[B_v, B_v g], [g^H B_v, g^H B_v g]]``.

    ``basis`` is the stacked Hermitian coordinate basis (d, nt, nt); the
    result has shape (d, (nt+1)**2).  This is the common bordered pattern of
    every S-procedure block: the ball center ``g`` appears in both
    off-diagonal slots.
    """
    d, nt = basis.shape[0], g.shape[0]
    Z = np.zeros((d, nt + 1, nt + 1), dtype=np.complex128)
    Bg = basis @ g
    Z[:, :nt, :nt] = basis
    Z[:, :nt, nt] = Bg
    Z[:, nt, :nt] = Bg.conj()
    Z[:, nt, nt] = (Bg @ g.conj()).real
    return svec_many(Z)


def _ball_shape(p: int, xi: float) -> np.ndarray:
    """svec of ``diag(I, -xi^2)``: the multiplier's contribution to a block."""
    col = np.zeros(p * p)
    col[: p - 1] = 1.0
    col[p - 1] = -(xi * xi)
    return col


def build_p4(
    params: SystemParams,
    channels: ChannelSet,
    beta: float,
    eps_t: float = 1e-6,
    *,
    w_trace_penalty: float = 0.0,
) -> ConicProblem:
    """Build the fixed-``beta`` inner problem: maximize the worst-case energy floor.

    Returns a :class:`ConicProblem` whose objective is ``minimize -tau``.
    ``eps_t`` keeps ``t = 1/rho`` strictly above 1 so the power splitter
    feeds the harvester a positive share (conic solvers need closed sets,
    so the strict inequalities carry an explicit margin).

    A positive ``w_trace_penalty`` adds ``+ penalty * Tr(W)`` to the cost.
    The floor-optimal set is not always a single point: every constraint
    except the secrecy margin acts on ``W + Sigma`` only, so signal-side
    power in directions the secrecy row does not need can sit in either
    covariance, and an interior-point solver returns a mid-face blend of
    inflated rank.  The penalty resolves that split toward the vertex
    whose signal covariance carries nothing but the secrecy-serving
    component, at a floor cost bounded by ``penalty * p_th``.

    Raises ``ValueError`` for ``beta`` outside :func:`beta_bounds`, a
    non-positive ``eps_t``, a negative or non-finite ``w_trace_penalty``,
    or mismatched params/channels dimensions.
    """
    if channels.nt != params.nt:
        raise ValueError("params and channels disagree on antenna count")
    if channels.num_ehr != params.num_ehr or channels.num_pu != params.num_pu:
        raise ValueError("params and channels disagree on receiver counts")
    if not eps_t > 0:
        raise ValueError(f"eps_t must be > 0, got {eps_t}")
    if not (math.isfinite(w_trace_penalty) and w_trace_penalty >= 0.0):
        raise ValueError(
            f"w_trace_penalty must be a finite nonnegative float, got {w_trace_penalty}"
        )
    lo, hi = beta_bounds(params, channels.h)
    slack = 1e-9 * (1.0 + hi)  # tolerate float round-off at grid endpoints
    if not lo - slack <= beta <= hi + slack:
        raise ValueError(f"beta={beta} outside [{lo}, {hi}]")

    nt, kk, mm = params.nt, params.num_ehr, params.num_pu
    ehr_act = tuple(xi > 0 for xi in params.xi_e)
    pu_act = tuple(xi > 0 for xi in params.xi_p)
    lay = VariableLayout(
        nt=nt, num_ehr=kk, num_pu=mm, ehr_active=ehr_act, pu_active=pu_act
    )
    d = lay.mat_len
    p = nt + 1  # side of every bordered block
    pp = p * p
    basis = _smat_basis(nt)
    h_vec = svec(np.outer(channels.h, channels.h.conj()))
    eye_vec = svec(np.eye(nt))
    g_vecs = [svec(np.outer(g, g.conj())) for g in channels.g_bar]
    q_vecs = [svec(np.outer(q, q.conj())) for q in channels.q_bar]

    # Splitter energy floor u*(t-1) >= c with u = Tr((W+Sigma)H)+sigma_s2-c.
    c_soc = params.psi_s / params.eta
    degenerate = c_soc <= 0  # floor met for free; keep only u >= 0

    n_nominal = 2 * (kk - lay.n_ehr_mult) + (mm - lay.n_pu_mult)
    n_nonneg = 2 * lay.n_ehr_mult + lay.n_pu_mult + 3 + n_nominal
    if degenerate:
        n_nonneg += 1
    cones = ConeSpec(
        nonneg=n_nonneg,
        soc=() if degenerate else (3,),
        psd=(nt, nt) + (p,) * (2 * lay.n_ehr_mult + lay.n_pu_mult),
    )
    n = lay.num_vars
    A = np.zeros((cones.total_rows, n))
    b = np.zeros(cones.total_rows)
    c = np.zeros(n)
    c[lay.tau] = -1.0
    if w_trace_penalty > 0.0:
        c[lay.w] = w_trace_penalty * eye_vec

    # --- nonnegative rows ------------------------------------------------
    r = 0
    for sl in (lay.omega, lay.mu, lay.delta):
        for j in range(sl.start, sl.stop):
            A[r, j] = -1.0
            r += 1
    A[r, lay.t] = -1.0
    b[r] = -(1.0 + eps_t)
    r += 1
    if degenerate:
        A[r, lay.w] = -h_vec
        A[r, lay.sigma] = -h_vec
        b[r] = params.sigma_s2 - c_soc
        r += 1
    # Secrecy margin: Tr(WH) + a Tr(Sigma H) + a (sigma_s2 + sigma_sp2 t) >= 0
    # with a = 1 - 2^r_min * beta; a <= 0 whenever the rate target binds.
    a = 1.0 - (2.0**params.r_min) * beta
    A[r, lay.w] = -h_vec
    A[r, lay.sigma] = -a * h_vec
    A[r, lay.t] = -a * params.sigma_sp2
    b[r] = a * params.sigma_s2
    r += 1
    A[r, lay.w] = eye_vec  # power budget: Tr(W + Sigma) <= p_th
    A[r, lay.sigma] = eye_vec
    b[r] = params.p_th
    r += 1
    # Radius-0 balls: the constraint holds iff it holds at the nominal channel.
    for k in range(kk):
        if ehr_act[k]:
            continue
        A[r, lay.w] = g_vecs[k]  # g^H (W - (beta-1) Sigma) g <= (beta-1) sigma_e2
        A[r, lay.sigma] = -(beta - 1.0) * g_vecs[k]
        b[r] = (beta - 1.0) * params.sigma_e2
        r += 1
    for i in range(mm):
        if pu_act[i]:
            continue
        A[r, lay.w] = q_vecs[i]  # q^H (W + Sigma) q <= p_in
        A[r, lay.sigma] = q_vecs[i]
        b[r] = params.p_in[i]
        r += 1
    for k in range(kk):
        if ehr_act[k]:
            continue
        A[r, lay.w] = -g_vecs[k]  # eta (g^H (W+Sigma) g + sigma_e2) >= tau
        A[r, lay.sigma] = -g_vecs[k]
        A[r, lay.tau] = 1.0 / params.eta
        b[r] = params.sigma_e2
        r += 1

    # --- second-order cone ------------------------------------------------
    if not degenerate:
        u_const = params.sigma_s2 - c_soc
        A[r, lay.w] = A[r + 2, lay.w] = -h_vec
        A[r, lay.sigma] = A[r + 2, lay.sigma] = -h_vec
        A[r, lay.t] = -1.0  # row r is u + v, row r+2 is u - v, v = t - 1
        A[r + 2, lay.t] = 1.0
        b[r] = u_const - 1.0
        b[r + 1] = 2.0 * np.sqrt(c_soc)
        b[r + 2] = u_const + 1.0
        r += 3

    # --- PSD blocks --------------------------------------------------------
    A[r : r + d, lay.w] = -np.eye(d)
    r += d
    A[r : r + d, lay.sigma] = -np.eye(d)
    r += d

    # Worst-case leakage: for every g in the ball around g_bar_k the idle
    # receiver's SINR stays <= beta - 1.
    col = lay.omega.start
    for k in range(kk):
        if not ehr_act[k]:
            continue
        pat = _bordered(basis, channels.g_bar[k]).T
        A[r : r + pp, lay.w] = pat
        A[r : r + pp, lay.sigma] = -(beta - 1.0) * pat
        A[r : r + pp, col] = -_ball_shape(p, params.xi_e[k])
        b[r + p - 1] = (beta - 1.0) * params.sigma_e2
        r += pp
        col += 1

    # Worst-case interference at each primary user stays <= its ceiling.
    col = lay.delta.start
    for i in range(mm):
        if not pu_act[i]:
            continue
        pat = _bordered(basis, channels.q_bar[i]).T
        A[r : r + pp, lay.w] = pat
        A[r : r + pp, lay.sigma] = pat
        A[r : r + pp, col] = -_ball_shape(p, params.xi_p[i])
        b[r + p - 1] = params.p_in[i]
        r += pp
        col += 1

    # Worst-case harvested energy at each idle receiver stays >= tau.
    col = lay.mu.start
    for k in range(kk):
        if not ehr_act[k]:
            continue
        pat = _bordered(basis, channels.g_bar[k]).T
        A[r : r + pp, lay.w] = -pat
        A[r : r + pp, lay.sigma] = -pat
        A[r : r + pp, col] = -_ball_shape(p, params.xi_e[k])
        A[r + p - 1, lay.tau] = 1.0 / params.eta
        b[r + p - 1] = params.sigma_e2
        r += pp
        col += 1

    assert r == cones.total_rows
    return ConicProblem(c=c, A=A, b=b, cones=cones, layout=lay)


def map_solution(sol: ConicSolution, layout: VariableLayout):
    """Unpack an optimal solver point into model-space quantities.

    Returns ``(W, Sigma, t, tau, slacks)`` where ``slacks`` holds the ball
    multipliers ``{"omega", "mu", "delta"}`` at full receiver-count length
    (radius-0 entries read 0.0).  ``W`` and ``Sigma`` come back exactly
    Hermitian (``smat`` symmetrizes by construction); eigenvalues may be
    slightly negative within solver tolerance.
    """
    if sol.status != "optimal":
        raise ValueError(f"cannot map a solution with status {sol.status!r}")
    W, Sigma, t, tau, omega, mu, delta = layout.split(sol.x)
    return W, Sigma, t, tau, {"omega": omega, "mu": mu, "delta": delta}
