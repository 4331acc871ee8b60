"""Photon loss and relative-phase noise."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from . import fock
from .fock import A, B, DensityOperator, TruncationError, _mode_index
from .numerics import QuadratureRule, gaussian_quadrature, refine_node_count

DEPHASING_LEAKAGE_BOUND = 1e-7
MAX_DISPLACED_CUTOFF = 400


@dataclass(frozen=True)
class KrausChannel:
    kraus_ops: tuple
    eta: float = 1.0
    kind: str = "custom"

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    def completeness_defect(self) -> float:
        total = sum(k.conj().T @ k for k in self.kraus_ops)
        return float(np.max(np.abs(total - np.eye(self.dim))))


def _loss_weights(eta: float, dim: int) -> np.ndarray:
    """``w[k, n] = sqrt(C(n, k) eta^(n-k) (1-eta)^k)`` for ``k <= n``, else 0."""
    n = np.arange(dim)[None, :]
    k = np.arange(dim)[:, None]
    valid = k <= n
    with np.errstate(divide="ignore", invalid="ignore"):
        log_binom = gammaln(n + 1) - gammaln(k + 1) - gammaln(np.maximum(n - k, 0) + 1)
        log_w = log_binom + (n - k) * np.log(eta) + k * np.log1p(-eta)
        w = np.exp(0.5 * np.where(valid, log_w, -np.inf))
    # 0 ** 0 cases the logs cannot express
    if eta == 1.0:
        w = np.where(valid & (k == 0), 1.0, 0.0)
    elif eta == 0.0:
        w = np.where(valid & (k == n), 1.0, 0.0)
    return w


def loss_channel(eta: float, dim: int) -> KrausChannel:
    """Beam-splitter loss with transmission ``eta`` as Kraus operators ``K_k``.

    ``<n-k|K_k|n> = sqrt(C(n,k) eta^(n-k) (1-eta)^k)``.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmission must lie in [0, 1], got {eta}")
    dim = fock._check_dim(dim)
    w = _loss_weights(eta, dim)
    ops = []
    for k in range(dim):
        m = np.zeros((dim, dim), dtype=np.complex128)
        n = np.arange(k, dim)
        m[n - k, n] = w[k, k:]
        if k == 0 or np.any(m):
            ops.append(m)
    return KrausChannel(tuple(ops), float(eta), "loss")


def apply_channel(rho: DensityOperator, channel: KrausChannel, mode: str | None = None) -> DensityOperator:
    """``sum_k (I (x) K_k) rho (I (x) K_k)^dag`` with the channel on ``mode``.

    Single-mode densities take ``mode=None``.
    """
    dims = rho.mode_dims
    if len(dims) == 1:
        axis = 0
    else:
        if mode is None:
            raise ValueError("two-mode density needs mode='A' or 'B'")
        axis = _mode_index(mode)
    if channel.dim != dims[axis]:
        raise ValueError(f"channel dimension {channel.dim} does not match mode dimension {dims[axis]}")
    t = rho.tensor()
    out = np.zeros_like(t)
    n_modes = len(dims)
    for k in channel.kraus_ops:
        # contract K on the ket index and K^* on the bra index of the chosen mode
        tk = np.moveaxis(np.tensordot(k, t, axes=([1], [axis])), 0, axis)
        tk = np.moveaxis(np.tensordot(tk, k.conj(), axes=([axis + n_modes], [1])), -1, axis + n_modes)
        out += tk
    return DensityOperator(out.reshape(rho.matrix.shape), dims, rho.leakage)


def apply_loss(rho: DensityOperator, eta: float, mode: str | None = None) -> DensityOperator:
    """Loss on one mode using the shifted-diagonal structure of the Kraus set."""
    dims = rho.mode_dims
    axis = 0 if len(dims) == 1 else _mode_index(mode)
    d = dims[axis]
    w = _loss_weights(eta, d)
    t = rho.tensor()
    out = np.zeros_like(t)
    n_modes = len(dims)
    for k in range(d):
        wk = w[k, k:]
        if not np.any(wk):
            continue
        src = [slice(None)] * (2 * n_modes)
        dst = [slice(None)] * (2 * n_modes)
        src[axis] = src[axis + n_modes] = slice(k, d)
        dst[axis] = dst[axis + n_modes] = slice(0, d - k)
        shape = [1] * (2 * n_modes)
        shape[axis] = d - k
        weight = wk.reshape(shape)
        shape_b = [1] * (2 * n_modes)
        shape_b[axis + n_modes] = d - k
        out[tuple(dst)] += t[tuple(src)] * weight * wk.reshape(shape_b)
    return DensityOperator(out.reshape(rho.matrix.shape), dims, rho.leakage)


def coupling_loss_state(
    alpha: complex,
    eta_c: float,
    dims: Sequence[int] | None = None,
    padding: int = fock.DISPLACEMENT_PADDING,
) -> DensityOperator:
    """Output of the beam splitter when the single photon first crosses loss ``eta_c``.

    The lossy photon is the Kraus ensemble ``{K_k |1>}``; each member is mixed
    with ``|sqrt(2) alpha>`` on a padded space and truncated to ``dims``.
    """
    if dims is None:
        d = fock.adaptive_cutoff(alpha)
        dims = (d, d)
    dim_a, dim_b = dims
    big = max(dims) + padding
    chan = loss_channel(eta_c, big)
    photon = fock.fock_vector(1, big)
    coh = fock.displaced_fock(math.sqrt(2) * alpha, 0, big)
    coh = coh / np.linalg.norm(coh)
    u = fock.beam_splitter_50_50((big, big))
    rho = np.zeros((dim_a * dim_b, dim_a * dim_b), dtype=np.complex128)
    for k in chan.kraus_ops:
        branch = k @ photon
        if not np.any(branch):
            continue
        out = (u @ np.outer(branch, coh).ravel()).reshape(big, big)[:dim_a, :dim_b].ravel()
        rho += np.outer(out, out.conj())
    leak = max(0.0, 1.0 - float(np.trace(rho).real))
    return DensityOperator(rho / np.trace(rho).real, tuple(dims), leak)


# ---------------------------------------------------------------------------
# Phase noise
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseNoiseModel:
    """Distribution of a relative phase: ``delta`` (no noise) or ``gaussian``.

    ``variance`` is in rad^2.
    """

    kind: str
    variance: float
    rule: QuadratureRule

    def __post_init__(self):
        if self.kind not in ("delta", "gaussian", "monte_carlo"):
            raise ValueError(f"unknown phase-noise kind {self.kind!r}")
        if self.kind == "delta" and (self.variance != 0 or len(self.rule) != 1):
            raise ValueError("delta noise must have zero variance and a single node")

    @classmethod
    def delta(cls) -> "PhaseNoiseModel":
        return cls("delta", 0.0, gaussian_quadrature(0.0))

    @classmethod
    def gaussian(cls, variance: float, n_nodes: int = 41) -> "PhaseNoiseModel":
        if variance == 0:
            return cls.delta()
        return cls("gaussian", float(variance), gaussian_quadrature(variance, n_nodes))

    @classmethod
    def from_rule(cls, variance: float, rule: QuadratureRule) -> "PhaseNoiseModel":
        if variance == 0:
            return cls.delta()
        return cls("gaussian", float(variance), rule)

    @classmethod
    def monte_carlo(cls, variance: float, n_samples: int, seed: int) -> "PhaseNoiseModel":
        """Equal-weight random phases; for validating the quadrature only."""
        rng = np.random.default_rng(seed)
        nodes = rng.normal(0.0, math.sqrt(variance), size=n_samples)
        return cls("monte_carlo", float(variance), QuadratureRule(nodes, np.full(n_samples, 1.0 / n_samples)))

    def refined(self) -> "PhaseNoiseModel":
        if self.kind != "gaussian":
            return self
        return PhaseNoiseModel.gaussian(self.variance, refine_node_count(len(self.rule)))


def _characteristic(rule: QuadratureRule, m: np.ndarray) -> np.ndarray:
    """``sum_k w_k exp(i phi_k m)`` for an integer array ``m``."""
    phases = np.exp(1j * np.multiply.outer(m, rule.nodes))
    return phases @ rule.weights


def _dephased_lab(alpha: complex, noise: PhaseNoiseModel, dims) -> DensityOperator:
    psi = fock.build_output_state(alpha, dims)
    d_a, d_b = psi.mode_dims
    v = psi.vector
    n_a = np.repeat(np.arange(d_a), d_b)
    diff = np.subtract.outer(n_a, n_a)
    char = _characteristic(noise.rule, np.arange(-(d_a - 1), d_a))
    mix = char[diff + d_a - 1]
    rho = np.outer(v, v.conj()) * mix
    return DensityOperator(rho, (d_a, d_b), psi.leakage)


def displaced_branch_vectors(alpha: complex, phis: np.ndarray, dim_a: int, dim_b: int = 2) -> np.ndarray:
    """Columns ``(e^{i phi} D(beta)|1>|0> - D(beta)|0>|1>)/sqrt(2)``, ``beta = alpha(e^{i phi} - 1)``.

    This is ``D_a(-alpha) D_b(-alpha)`` applied to the phase-shifted output
    state, up to a global phase common to both branches.
    """
    phis = np.asarray(phis, dtype=float)
    betas = alpha * (np.exp(1j * phis) - 1.0)
    amps = np.zeros((dim_a, dim_b, phis.size), dtype=np.complex128)
    amps[:, 0, :] = np.exp(1j * phis)[None, :] * fock.displaced_single_photons(betas, dim_a)
    amps[:, 1, :] = -fock.coherent_states(betas, dim_a)
    return amps.reshape(dim_a * dim_b, phis.size) / math.sqrt(2)


def _dephased_displaced(alpha, noise, dims, bound, max_cutoff, strict):
    rule = noise.rule
    if dims is None:
        # mode B stays in {|0>, |1>} in this frame; size mode A from the weighted tail
        dim_b = 2
        cols = displaced_branch_vectors(alpha, rule.nodes, max_cutoff, dim_b)
        pop_a = (np.abs(cols.reshape(max_cutoff, dim_b, -1)) ** 2).sum(axis=1)
        kept = np.cumsum(pop_a, axis=0) @ rule.weights
        ok = np.nonzero(1.0 - kept < bound)[0]
        dim_a = int(ok[0]) + 1 if ok.size else max_cutoff
        dim_a = max(dim_a, 2)
        cols = cols.reshape(max_cutoff, dim_b, -1)[:dim_a].reshape(dim_a * dim_b, -1)
    else:
        dim_a, dim_b = dims
        cols = displaced_branch_vectors(alpha, rule.nodes, dim_a, dim_b)
    rho = (cols * rule.weights) @ cols.conj().T
    tr = float(np.trace(rho).real)
    leak = max(0.0, 1.0 - tr)
    if leak > bound and strict:
        raise TruncationError(
            f"displaced-frame cutoff {dim_a} loses weighted mass {leak:.3e} > {bound:.1e}", leak
        )
    return DensityOperator(rho / tr, (dim_a, dim_b), leak)


def dephased_state(
    alpha: complex,
    noise: PhaseNoiseModel,
    dims: Sequence[int] | None = None,
    frame: str = "auto",
    bound: float = DEPHASING_LEAKAGE_BOUND,
    max_cutoff: int = MAX_DISPLACED_CUTOFF,
    strict: bool = True,
) -> DensityOperator:
    """Phase-averaged output state ``sum_k w_k |psi^phi_k><psi^phi_k|``.

    The phase ``phi`` acts as ``exp(i phi a^dag a)`` on mode A.  In the
    ``displaced`` frame the common local displacement ``D_a(-alpha) D_b(-alpha)``
    is applied to the mixture, which keeps mode B inside ``{|0>, |1>}`` and
    leaves the negativity unchanged.  ``auto`` picks the displaced frame when
    ``|alpha|^2 > 4``.

    The reported leakage is the node-weighted probability mass above the cutoff.
    With ``strict=False`` an insufficient cutoff is returned instead of raised.
    """
    if frame == "auto":
        frame = "displaced" if abs(alpha) ** 2 > 4 else "lab"
    if frame == "lab":
        return _dephased_lab(alpha, noise, dims)
    if frame == "displaced":
        return _dephased_displaced(alpha, noise, dims, bound, max_cutoff, strict)
    raise ValueError(f"frame must be 'lab', 'displaced' or 'auto', got {frame!r}")
