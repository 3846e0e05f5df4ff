"""Downlink/uplink SINR, MMSE receive beamformers and the equivalent channel.

Beamformer sets are plain ``M x N`` complex arrays whose column ``i`` is the
unit-norm ``u_i``. Channels are :class:`backhaul.model.Channel` objects.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg

from .model import Channel

__all__ = [
    "normalize_beamformers",
    "downlink_sinr",
    "uplink_sinr",
    "sinr_from_gains",
    "mmse_solve",
    "mmse_beamformers",
    "mmse_uplink_sinr",
    "equivalent_channel",
]


def _vec(x, n, name):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = np.full(n, float(x))
    if x.shape != (n,):
        raise ValueError(f"{name} has shape {x.shape}, expected ({n},)")
    return x


def _check_U(channel: Channel, U) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.shape != (channel.M, channel.N):
        raise ValueError(f"beamformers have shape {U.shape}, expected {(channel.M, channel.N)}")
    return U


def normalize_beamformers(V) -> np.ndarray:
    """Scale columns to unit norm and rotate each so that its first nonzero
    entry is real and nonnegative."""
    V = np.array(V, dtype=complex)
    V /= np.linalg.norm(V, axis=0, keepdims=True)
    nz = np.argmax(np.abs(V) > 1e-300, axis=0)
    lead = V[nz, np.arange(V.shape[1])]
    V *= np.conj(lead / np.abs(lead))
    return V


def equivalent_channel(channel: Channel, U) -> np.ndarray:
    """``G[i, j] = |h_i^H u_j|^2``."""
    U = _check_U(channel, U)
    return np.abs(channel.H @ U) ** 2


def sinr_from_gains(G, p, noise, M):
    """Downlink SINR of a gain matrix ``G``:
    ``(p_i/M) G_ii / (sum_{j != i} (p_j/M) G_ij + noise_i)``.

    The uplink SINR with beamformers ``U`` is the same expression evaluated
    on ``G.T`` with uplink powers and the weights as noise.
    """
    G = np.asarray(G, dtype=float)
    s = np.asarray(p, dtype=float) / M
    signal = np.diag(G) * s
    return signal / (G @ s - signal + noise)


def downlink_sinr(channel: Channel, U, p, n) -> np.ndarray:
    p = _vec(p, channel.N, "p")
    if np.any(p < 0):
        raise ValueError("powers must be nonnegative")
    G = equivalent_channel(channel, U)
    return sinr_from_gains(G, p, _vec(n, channel.N, "n"), channel.M)


def uplink_sinr(channel: Channel, U, q, w) -> np.ndarray:
    q = _vec(q, channel.N, "q")
    if np.any(q < 0):
        raise ValueError("powers must be nonnegative")
    G = equivalent_channel(channel, U)
    return sinr_from_gains(G.T, q, _vec(w, channel.N, "w"), channel.M)


def mmse_solve(channel: Channel, q, w):
    """Solve ``C_i x_i = h_i`` for every SAP, where
    ``C_i = sum_{j != i} (q_j/M) h_j h_j^H + w_i I``.

    Returns ``(X, s)`` with ``X[:, i] = C_i^{-1} h_i`` and
    ``s[i] = h_i^H C_i^{-1} h_i`` (real, positive).

    With equal weights a single Cholesky factor of
    ``A = sum_j (q_j/M) h_j h_j^H + w I`` serves every SAP: by the
    Sherman-Morrison identity ``C_i^{-1} h_i = A^{-1} h_i / (1 - (q_i/M) t_i)``
    with ``t_i = h_i^H A^{-1} h_i``. Otherwise each ``C_i`` is factored.
    """
    M, N = channel.M, channel.N
    q = _vec(q, N, "q")
    w = _vec(w, N, "w")
    if np.any(q < 0) or np.any(w <= 0):
        raise ValueError("need q >= 0 and w > 0")
    h = channel.h
    hs = h * np.sqrt(q / M)
    S = hs @ hs.conj().T
    if np.all(w == w[0]):
        A = S + w[0] * np.eye(M)
        cf = linalg.cho_factor(A, lower=True, check_finite=False)
        Y = linalg.cho_solve(cf, h, check_finite=False)
        t = np.real(np.einsum("mi,mi->i", h.conj(), Y))
        # 1 - (q/M) t = 1 / (1 + SINR_i) > 0 in exact arithmetic
        scale = 1.0 / (1.0 - q / M * t)
        return Y * scale, t * scale
    X = np.empty((M, N), dtype=complex)
    s = np.empty(N)
    eye = np.eye(M)
    for i in range(N):
        C = S - (q[i] / M) * np.outer(h[:, i], h[:, i].conj()) + w[i] * eye
        cf = linalg.cho_factor(C, lower=True, check_finite=False)
        X[:, i] = linalg.cho_solve(cf, h[:, i], check_finite=False)
        s[i] = np.real(np.vdot(h[:, i], X[:, i]))
    return X, s


def mmse_beamformers(channel: Channel, q, w) -> np.ndarray:
    """Unit-norm MMSE receivers ``u_i ∝ C_i^{-1} h_i`` as an M x N array."""
    X, _ = mmse_solve(channel, q, w)
    return normalize_beamformers(X)


def mmse_uplink_sinr(channel: Channel, q, w) -> np.ndarray:
    """Uplink SINR reached by the MMSE receivers:
    ``(q_i/M) h_i^H C_i^{-1} h_i``."""
    q = _vec(q, channel.N, "q")
    _, s = mmse_solve(channel, q, w)
    return q / channel.M * s
