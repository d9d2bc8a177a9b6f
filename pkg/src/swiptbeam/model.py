"""System model for the MISO SWIPT cognitive-radio downlink.

A multi-antenna secondary transmitter sends a beamformed data stream plus
artificial noise.  The secondary receiver splits its received power between
an information decoder and an energy harvester, while idle receivers
(potential eavesdroppers) harvest energy and primary users must be shielded
from excess interference.  This module holds the parameter / channel /
design containers and the closed-form performance evaluators; everything
here is deterministic and side-effect free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "SystemParams",
    "ChannelSet",
    "TransmitDesign",
    "secrecy_rate",
    "harvested_energy_su",
    "harvested_energy_ehr",
    "pu_interference",
    "generate_channels",
]


def _as_float_tuple(x, n: int, name: str) -> tuple[float, ...]:
    """Broadcast a scalar to length ``n`` or validate a length-``n`` sequence."""
    if np.isscalar(x):
        return (float(x),) * n
    vals = tuple(float(v) for v in x)
    if len(vals) != n:
        raise ValueError(f"{name} must have length {n}, got {len(vals)}")
    return vals


@dataclass(frozen=True)
class SystemParams:
    """Static scenario description, all quantities in linear units (W, bits/s/Hz).

    Attributes
    ----------
    nt : transmit antenna count.
    num_ehr : number of idle energy-harvesting receivers (potential
        eavesdroppers), ``K``.
    num_pu : number of primary users sharing the band, ``M``.
    sigma_s2, sigma_e2 : antenna noise power at the secondary receiver and
        at each idle receiver [W].
    sigma_sp2 : processing noise added after the power splitter at the
        secondary receiver [W].
    eta : energy conversion efficiency of the harvesters, in (0, 1].
    p_th : transmit power budget [W].
    p_in : per-primary-user interference ceiling [W], length ``num_pu``.
    psi_s : minimum energy the secondary receiver must harvest [W].
    r_min : secrecy rate target [bits/s/Hz].
    xi_e : CSI error-ball radii for the idle receivers, length ``num_ehr``.
    xi_p : CSI error-ball radii for the primary users, length ``num_pu``.
    """

    nt: int
    num_ehr: int
    num_pu: int
    sigma_s2: float
    sigma_e2: float
    sigma_sp2: float
    eta: float
    p_th: float
    p_in: tuple[float, ...]
    psi_s: float
    r_min: float
    xi_e: tuple[float, ...]
    xi_p: tuple[float, ...]

    def __post_init__(self):
        for name, lo in (("nt", 1), ("num_ehr", 1), ("num_pu", 0)):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < lo:
                raise ValueError(f"{name} must be an integer >= {lo}, got {v!r}")
        for name in ("sigma_s2", "sigma_e2", "sigma_sp2", "p_th", "psi_s"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if self.r_min < 0:
            raise ValueError(f"r_min must be >= 0, got {self.r_min}")
        object.__setattr__(self, "p_in", _as_float_tuple(self.p_in, self.num_pu, "p_in"))
        object.__setattr__(self, "xi_e", _as_float_tuple(self.xi_e, self.num_ehr, "xi_e"))
        object.__setattr__(self, "xi_p", _as_float_tuple(self.xi_p, self.num_pu, "xi_p"))
        if any(p <= 0 for p in self.p_in):
            raise ValueError("all interference ceilings p_in must be > 0")
        if any(x < 0 for x in self.xi_e) or any(x < 0 for x in self.xi_p):
            raise ValueError("uncertainty radii must be >= 0")


def _frozen_complex(a, shape: tuple[int, ...], name: str) -> np.ndarray:
    arr = np.array(a, dtype=np.complex128)
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ChannelSet:
    """One realization of all nominal channels.

    ``h`` is the secondary-receiver channel (known exactly), ``g_bar[k]``
    the nominal channel of idle receiver ``k`` and ``q_bar[i]`` the nominal
    channel towards primary user ``i``.  Arrays are write-protected so a
    realization can be shared across worker threads.
    """

    h: np.ndarray
    g_bar: np.ndarray
    q_bar: np.ndarray

    def __post_init__(self):
        nt = np.asarray(self.h).shape[-1]
        object.__setattr__(self, "h", _frozen_complex(self.h, (nt,), "h"))
        k = np.asarray(self.g_bar).shape[0]
        m = np.asarray(self.q_bar).shape[0]
        object.__setattr__(self, "g_bar", _frozen_complex(self.g_bar, (k, nt), "g_bar"))
        object.__setattr__(self, "q_bar", _frozen_complex(self.q_bar, (m, nt), "q_bar"))

    @property
    def nt(self) -> int:
        return self.h.shape[0]

    @property
    def num_ehr(self) -> int:
        return self.g_bar.shape[0]

    @property
    def num_pu(self) -> int:
        return self.q_bar.shape[0]

    def take_ehrs(self, k: int) -> "ChannelSet":
        """Restrict to the first ``k`` idle receivers (prefix property for sweeps)."""
        if not 1 <= k <= self.num_ehr:
            raise ValueError(f"k must be in [1, {self.num_ehr}], got {k}")
        return ChannelSet(h=self.h, g_bar=self.g_bar[:k], q_bar=self.q_bar)


def _check_hermitian_psd(mat: np.ndarray, nt: int, name: str) -> np.ndarray:
    m = np.array(mat, dtype=np.complex128)
    if m.shape != (nt, nt):
        raise ValueError(f"{name} must be {nt}x{nt}, got {m.shape}")
    asym = np.abs(m - m.conj().T).max()
    if asym > 1e-12:
        raise ValueError(f"{name} is not Hermitian (max asymmetry {asym:.3e})")
    m = 0.5 * (m + m.conj().T)  # exact Hermitian for downstream eigh calls
    tr = float(np.trace(m).real)
    lo = float(np.linalg.eigvalsh(m)[0])
    # absolute floor so a numerically-zero matrix with eigenvalues at the
    # noise level of a solver iterate still counts as PSD
    if lo < -1e-9 * max(tr, 1.0):
        raise ValueError(f"{name} is not PSD (min eigenvalue {lo:.3e}, trace {tr:.3e})")
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class TransmitDesign:
    """A transmit covariance pair plus the receiver's power-splitting ratio.

    ``W`` is the information-signal covariance, ``Sigma`` the artificial-noise
    covariance, and ``rho`` the fraction of received power routed to the
    information decoder.  ``rho = 1`` (no harvesting branch) is accepted so
    closed-form values can be probed at the boundary; optimized designs
    always land strictly inside (0, 1).  ``w_opt`` optionally carries a
    rank-one beamformer consistent with ``W``.
    """

    W: np.ndarray
    Sigma: np.ndarray
    rho: float
    w_opt: np.ndarray | None = None

    def __post_init__(self):
        nt = np.asarray(self.W).shape[0]
        object.__setattr__(self, "W", _check_hermitian_psd(self.W, nt, "W"))
        object.__setattr__(self, "Sigma", _check_hermitian_psd(self.Sigma, nt, "Sigma"))
        if not 0.0 < self.rho <= 1.0:
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")
        if self.w_opt is not None:
            w = _frozen_complex(self.w_opt, (nt,), "w_opt")
            tr = float(np.trace(self.W).real)
            if abs(tr - float(np.vdot(w, w).real)) > 1e-8 * tr:
                raise ValueError("w_opt norm is inconsistent with trace(W)")
            object.__setattr__(self, "w_opt", w)

    @property
    def nt(self) -> int:
        return self.W.shape[0]


def _quad(mat: np.ndarray, vec: np.ndarray) -> float:
    """Real value of the Hermitian quadratic form ``vec^H mat vec``."""
    return float(np.vdot(vec, mat @ vec).real)


def secrecy_rate(
    design: TransmitDesign,
    channels: ChannelSet,
    g_actual: Sequence[np.ndarray] | np.ndarray,
    params: SystemParams,
) -> float:
    """Achievable secrecy rate against the strongest of the given eavesdroppers.

    The secondary link rate is evaluated after power splitting,

        C_s = log2(1 + rho h^H W h / (rho (h^H Sigma h + sigma_s2) + sigma_sp2)),

    each idle receiver decodes at

        C_e,k = log2(1 + g_k^H W g_k / (g_k^H Sigma g_k + sigma_e2)),

    and the returned value is ``min_k (C_s - C_e,k)``.  ``g_actual`` holds the
    channels the eavesdroppers actually see (nominal plus any error); it is
    the caller's choice of point inside the uncertainty set.  The difference
    is returned unclamped, so a negative value signals secrecy outage.
    """
    if design.nt != channels.nt or design.nt != params.nt:
        raise ValueError("design, channels and params disagree on antenna count")
    g = np.array(g_actual, dtype=np.complex128)
    if g.shape != (params.num_ehr, params.nt):
        raise ValueError(
            f"g_actual must have shape ({params.num_ehr}, {params.nt}), got {g.shape}"
        )
    h = channels.h
    rho = design.rho
    num = rho * _quad(design.W, h)
    den = rho * (_quad(design.Sigma, h) + params.sigma_s2) + params.sigma_sp2
    c_s = np.log2(1.0 + num / den)
    c_e = [
        np.log2(1.0 + _quad(design.W, gk) / (_quad(design.Sigma, gk) + params.sigma_e2))
        for gk in g
    ]
    return float(c_s - max(c_e))


def harvested_energy_su(
    design: TransmitDesign, channels: ChannelSet, params: SystemParams
) -> float:
    """Energy the secondary receiver harvests from its power-splitter branch [W]."""
    if design.nt != channels.nt or design.nt != params.nt:
        raise ValueError("design, channels and params disagree on antenna count")
    h = channels.h
    total = _quad(design.W, h) + _quad(design.Sigma, h) + params.sigma_s2
    return (1.0 - design.rho) * params.eta * total

def harvested_energy_ehr(
    design: TransmitDesign, g: np.ndarray, params: SystemParams
) -> float:
    """Energy an idle receiver with channel ``g`` harvests [W]."""
    g = np.asarray(g, dtype=np.complex128)
    if g.shape != (design.nt,):
        raise ValueError(f"g must have shape ({design.nt},), got {g.shape}")
    return params.eta * (_quad(design.W, g) + _quad(design.Sigma, g) + params.sigma_e2)


def pu_interference(design: TransmitDesign, q: np.ndarray) -> float:
    """Interference power a primary user with channel ``q`` receives [W]."""
    q = np.asarray(q, dtype=np.complex128)
    if q.shape != (design.nt,):
        raise ValueError(f"q must have shape ({design.nt},), got {q.shape}")
    return _quad(design.W + design.Sigma, q)


# Sub-stream labels: keeps every channel vector on its own counter so that a
# realization with more idle receivers extends a smaller one entry for entry.
_GROUP_SU, _GROUP_EHR, _GROUP_PU = 0, 1, 2


def _cn_vector(seed: int, realization: int, group: int, member: int, nt: int) -> np.ndarray:
    """CN(0, I) vector from an independent, order-free substream."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(realization, group, member))
    rng = np.random.Generator(np.random.Philox(ss))
    re, im = rng.standard_normal((2, nt))
    return (re + 1j * im) / np.sqrt(2.0)


def generate_channels(
    params: SystemParams, seed: int, realization: int = 0
) -> ChannelSet:
    """Draw one Rayleigh-fading realization of all channels.

    ``h`` and the ``g_bar[k]`` are CN(0, I); the primary-user channels
    ``q_bar[i]`` are CN(0, 0.1 I) (weaker cross links).  Every vector comes
    from its own counter-based substream keyed by
    ``(seed, realization, group, member)``, so results are identical no
    matter how realizations are scheduled, and the idle-receiver list for a
    larger ``num_ehr`` is a prefix-extension of a smaller one.
    """
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    nt = params.nt
    h = _cn_vector(seed, realization, _GROUP_SU, 0, nt)
    g_bar = np.stack(
        [_cn_vector(seed, realization, _GROUP_EHR, k, nt) for k in range(params.num_ehr)]
    )
    q_list = [
        np.sqrt(0.1) * _cn_vector(seed, realization, _GROUP_PU, i, nt)
        for i in range(params.num_pu)
    ]
    q_bar = np.stack(q_list) if q_list else np.zeros((0, nt), dtype=np.complex128)
    return ChannelSet(h=h, g_bar=g_bar, q_bar=q_bar)
