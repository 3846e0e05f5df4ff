"""Problem instances for wireless-backhaul SAP admission.

A WBH (wireless backhaul hub) with ``M`` antennas serves ``N`` single-antenna
small-cell access points (SAPs). Everything here works in linear units; the
dB helpers at the top are the only place conversions happen.

Power conventions follow the scaled notation used throughout the package:
a downlink power vector ``p`` means the WBH actually radiates ``p_i / M`` for
SAP ``i``, and likewise ``q_i / M`` in the dual uplink.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

__all__ = [
    "db_to_linear",
    "linear_to_db",
    "dbm_to_watts",
    "watts_to_dbm",
    "ScenarioConfig",
    "Channel",
    "CellLayout",
    "MIN_DISTANCE_M",
    "gen_layout",
    "pathloss_db",
    "large_scale_gains",
    "large_scale_gain",
    "gen_channel",
    "Scenario",
    "scenario_from_dict",
    "load_scenario",
]

#: WBH-SAP distances are clipped below at this value to keep the
#: log-distance pathloss finite.
MIN_DISTANCE_M = 10.0


def _check_finite(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite value in {x!r}")
    return arr


def db_to_linear(x_db):
    """Convert a ratio in dB to a linear ratio. Accepts scalars or arrays."""
    arr = _check_finite(x_db)
    out = 10.0 ** (arr / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_db(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError("linear_to_db needs strictly positive finite input")
    out = 10.0 * np.log10(arr)
    return float(out) if out.ndim == 0 else out


def dbm_to_watts(x_dbm):
    return db_to_linear(np.asarray(x_dbm, dtype=float) - 30.0)


def watts_to_dbm(x_w):
    return linear_to_db(x_w) + 30.0


def _as_vector(value, n: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError(f"{name} must be finite and strictly positive")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ScenarioConfig:
    """One problem instance: dimensions, budget, weights, noise and targets.

    Parameters
    ----------
    M : int
        Number of WBH antennas.
    N : int
        Number of SAPs.
    P : float
        Weighted transmit power budget in watts.
    w : array_like
        Per-SAP power weights (scalar broadcasts).
    n : array_like
        Per-SAP noise variances in watts (scalar broadcasts).
    gamma : array_like
        Per-SAP SINR targets as linear ratios (scalar broadcasts).
    """

    M: int
    N: int
    P: float
    w: Any = 1.0
    n: Any = 1.0
    gamma: Any = 1.0

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError("M must be a positive integer")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if not (math.isfinite(self.P) and self.P > 0):
            raise ValueError("P must be finite and > 0")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "P", float(self.P))
        for name in ("w", "n", "gamma"):
            object.__setattr__(self, name, _as_vector(getattr(self, name), self.N, name))

    def subset(self, idx: Sequence[int]) -> "ScenarioConfig":
        """Restrict the instance to the SAPs listed in ``idx`` (in that order)."""
        idx = np.asarray(idx, dtype=int)
        if idx.size == 0:
            raise ValueError("cannot build an empty sub-instance")
        return ScenarioConfig(
            M=self.M, N=int(idx.size), P=self.P,
            w=self.w[idx], n=self.n[idx], gamma=self.gamma[idx],
        )

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class Channel:
    """Downlink channel. Row ``i`` of ``H`` is ``h_i^H``; ``d`` holds the
    large-scale gains used to generate it."""

    H: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        H = np.array(self.H, dtype=complex)
        if H.ndim != 2:
            raise ValueError("H must be an N x M matrix")
        d = np.asarray(self.d, dtype=float)
        if d.shape != (H.shape[0],):
            raise ValueError("d must have one entry per row of H")
        if np.any(d <= 0):
            raise ValueError("large-scale gains must be > 0")
        H.setflags(write=False)
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "d", d)

    @property
    def N(self) -> int:
        return self.H.shape[0]

    @property
    def M(self) -> int:
        return self.H.shape[1]

    @property
    def h(self) -> np.ndarray:
        """M x N matrix whose column ``i`` is ``h_i``."""
        return self.H.conj().T

    def subset(self, idx: Sequence[int]) -> "Channel":
        idx = np.asarray(idx, dtype=int)
        return Channel(self.H[idx], self.d[idx])

    @classmethod
    def from_vectors(cls, h, d=None) -> "Channel":
        """Build from an M x N matrix of column vectors ``h_i``."""
        h = np.asarray(h, dtype=complex)
        if d is None:
            d = np.ones(h.shape[1])
        return cls(h.conj().T, d)


@dataclass(frozen=True)
class CellLayout:
    """Macrocell geometry plus the propagation parameters of the cellular
    scenario. Defaults reproduce the single-macrocell setup (1 km cell,
    3GPP-style pathloss 128 + 37.6 log10(D[km]))."""

    sap_positions: np.ndarray
    cell_radius: float = 1000.0
    small_cell_radius: float = 30.0
    pathloss_intercept_db: float = 128.0
    pathloss_slope_db: float = 37.6
    shadowing_std: float = 10.0
    tx_antenna_gain: float = 5.0
    bandwidth: float = 10e6

    def __post_init__(self):
        pos = np.array(self.sap_positions, dtype=float).reshape(-1, 2)
        if np.any(np.hypot(pos[:, 0], pos[:, 1]) > self.cell_radius * (1 + 1e-12)):
            raise ValueError("SAP outside the macrocell")
        pos.setflags(write=False)
        object.__setattr__(self, "sap_positions", pos)

    @property
    def N(self) -> int:
        return self.sap_positions.shape[0]

    @property
    def distances_m(self) -> np.ndarray:
        return np.hypot(self.sap_positions[:, 0], self.sap_positions[:, 1])


def gen_layout(config: ScenarioConfig | int, seed, **layout_params) -> CellLayout:
    """Drop SAPs uniformly over the cell disk.

    ``config`` may be a :class:`ScenarioConfig` or just the SAP count. Points
    are uniform over the annulus between ``MIN_DISTANCE_M`` and the cell
    radius, which differs from the full disk by a 1e-4 fraction of area.
    """
    n_sap = config.N if isinstance(config, ScenarioConfig) else int(config)
    radius = float(layout_params.get("cell_radius", 1000.0))
    rng = np.random.default_rng(seed)
    r_min2 = min(MIN_DISTANCE_M, radius) ** 2
    r = np.sqrt(r_min2 + rng.uniform(size=n_sap) * (radius**2 - r_min2))
    theta = rng.uniform(0.0, 2 * np.pi, size=n_sap)
    pos = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    return CellLayout(pos, **layout_params)


def pathloss_db(distance_km, intercept=128.0, slope=37.6):
    distance_km = np.asarray(distance_km, dtype=float)
    if np.any(distance_km <= 0):
        raise ValueError("distance must be > 0")
    return intercept + slope * np.log10(distance_km)


def large_scale_gains(layout: CellLayout, seed) -> np.ndarray:
    """Linear large-scale gains ``d_i`` for every SAP of ``layout``.

    One lognormal shadowing draw per SAP (fixed for the layout, shared by all
    small-scale realizations) and distances clipped at ``MIN_DISTANCE_M``.
    """
    dist = np.maximum(layout.distances_m, MIN_DISTANCE_M) / 1000.0
    rng = np.random.default_rng(seed)
    shadow = layout.shadowing_std * rng.standard_normal(layout.N)
    loss = pathloss_db(dist, layout.pathloss_intercept_db, layout.pathloss_slope_db)
    return 10.0 ** ((layout.tx_antenna_gain - loss - shadow) / 10.0)


def large_scale_gain(layout: CellLayout, i: int, seed) -> float:
    if not 0 <= i < layout.N:
        raise IndexError(f"SAP {i} not in layout of {layout.N}")
    return float(large_scale_gains(layout, seed)[i])


def gen_channel(d, M: int, seed) -> Channel:
    """Rayleigh channel ``h_i = sqrt(d_i) * h~_i`` with ``h~_i ~ CN(0, I_M)``."""
    d = np.asarray(d, dtype=float).reshape(-1)
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise ValueError("large-scale gains must be finite and > 0")
    rng = np.random.default_rng(seed)
    g = (rng.standard_normal((d.size, M)) + 1j * rng.standard_normal((d.size, M))) / np.sqrt(2)
    # rows are h_i^H; conjugating a CN(0,1) draw leaves its law unchanged
    return Channel(np.sqrt(d)[:, None] * g, d)


_LAYOUT_KEYS = {
    "cell_radius_m": "cell_radius",
    "small_cell_radius_m": "small_cell_radius",
    "shadowing_dB": "shadowing_std",
    "antenna_gain_dB": "tx_antenna_gain",
    "bandwidth_Hz": "bandwidth",
}


@dataclass(frozen=True)
class Scenario:
    """A parsed scenario file: the instance parameters, layout parameters
    and master seed."""

    config: ScenarioConfig
    layout_params: dict = field(default_factory=dict)
    seed: int = 0


def scenario_from_dict(raw: Mapping[str, Any]) -> Scenario:
    """Parse the key-value scenario format.

    Recognised keys: ``M``, ``N``, ``P_dBm`` | ``P_watts``, ``weights``,
    ``noise_dBm`` | ``noise_watts``, ``gamma_dB`` | ``gamma`` (scalar or
    list), ``cell_radius_m``, ``small_cell_radius_m``, ``shadowing_dB``,
    ``antenna_gain_dB``, ``bandwidth_Hz``, ``seed``.
    """
    raw = dict(raw)
    try:
        M, N = int(raw.pop("M")), int(raw.pop("N"))
    except KeyError as exc:
        raise ValueError(f"scenario is missing key {exc}") from None

    def pick(lin_key, db_key, default_lin, db_fn):
        if lin_key in raw and db_key in raw:
            raise ValueError(f"give only one of {lin_key} / {db_key}")
        if lin_key in raw:
            return raw.pop(lin_key)
        if db_key in raw:
            return db_fn(raw.pop(db_key))
        return default_lin

    P = pick("P_watts", "P_dBm", 1.0, dbm_to_watts)
    noise = pick("noise_watts", "noise_dBm", dbm_to_watts(-93.98), dbm_to_watts)
    gamma = pick("gamma", "gamma_dB", 1.0, db_to_linear)
    weights = raw.pop("weights", 1.0)
    seed = int(raw.pop("seed", 0))
    layout_params = {}
    for key, attr in _LAYOUT_KEYS.items():
        if key in raw:
            layout_params[attr] = float(raw.pop(key))
    if raw:
        raise ValueError(f"unknown scenario keys: {sorted(raw)}")
    config = ScenarioConfig(M=M, N=N, P=float(P), w=weights, n=noise, gamma=gamma)
    return Scenario(config, layout_params, seed)


def load_scenario(path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))
