"""Multistatic scene geometry, polynomial target motion and propagation delays.

Positions are plain ``(3,)`` float arrays in meters.  A 2D setup is expressed
in the 3D frame by placing all antennas at z=0 and pinning the target's
z-coefficients to zero (``MotionCoefficients.planar``).

Transmit/receive path ``(m, n)`` maps to the flat path index ``n * M + m``
(transmitter index varies fastest).  Every module in this package uses that
layout for path-indexed vectors and diagonal matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .validation import check_finite, as_points

__all__ = [
    "AntennaGeometry",
    "MotionCoefficients",
    "RadarParams",
    "polynomial_basis",
    "eval_position",
    "path_ranges",
    "path_delay",
    "instantaneous_doppler",
]


@dataclass(frozen=True)
class AntennaGeometry:
    """Fixed transmitter and receiver locations of the multistatic scene.

    Parameters
    ----------
    transmitters : array_like, shape (M, 2) or (M, 3)
        Transmit antenna positions in meters.  2D inputs get z=0.
    receivers : array_like, shape (N, 2) or (N, 3)
        Receive antenna positions in meters.
    """

    transmitters: np.ndarray
    receivers: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "transmitters", as_points(self.transmitters, "transmitters"))
        object.__setattr__(self, "receivers", as_points(self.receivers, "receivers"))
        if len(self.transmitters) < 1:
            raise ValueError("need at least one transmitter")
        if len(self.receivers) < 1:
            raise ValueError("need at least one receiver")

    @property
    def n_tx(self) -> int:
        return len(self.transmitters)

    @property
    def n_rx(self) -> int:
        return len(self.receivers)

    @property
    def n_paths(self) -> int:
        """Number of transmit-receive paths M*N."""
        return self.n_tx * self.n_rx


@dataclass(frozen=True)
class MotionCoefficients:
    """Factorial-weighted polynomial motion coefficients, one set per axis.

    The target position at time t is, per axis,
    ``sum_q c[q] * t**q / q!``, so orders 0, 1, 2 are initial position
    (m), velocity (m/s) and acceleration (m/s^2).

    Parameters
    ----------
    cx, cy, cz : array_like, shape (Q+1,)
        Coefficients for the x, y and z axes.  ``cz`` may be omitted for
        planar scenes.
    planar : bool
        If True the z axis is pinned to zero and excluded from the free
        parameter vector.
    """

    cx: np.ndarray
    cy: np.ndarray
    cz: np.ndarray = None
    planar: bool = False

    def __post_init__(self):
        cx = np.atleast_1d(np.asarray(self.cx, dtype=float))
        cy = np.atleast_1d(np.asarray(self.cy, dtype=float))
        if self.cz is None:
            cz = np.zeros_like(cx)
            object.__setattr__(self, "planar", True)
        else:
            cz = np.atleast_1d(np.asarray(self.cz, dtype=float))
        if not (cx.shape == cy.shape == cz.shape) or cx.ndim != 1:
            raise ValueError("cx, cy, cz must be 1-D arrays of equal length Q+1")
        if self.planar and np.any(cz != 0.0):
            raise ValueError("planar motion requires all-zero z coefficients")
        for name, arr in (("cx", cx), ("cy", cy), ("cz", cz)):
            check_finite(arr, name)
        object.__setattr__(self, "cx", cx)
        object.__setattr__(self, "cy", cy)
        object.__setattr__(self, "cz", cz)

    @property
    def order(self) -> int:
        """Polynomial order Q."""
        return len(self.cx) - 1

    @property
    def n_free(self) -> int:
        """Length of the free parameter vector (z excluded when planar)."""
        return (2 if self.planar else 3) * (self.order + 1)

    def to_vector(self) -> np.ndarray:
        """Stack the free coefficients as [cx, cy(, cz)]."""
        if self.planar:
            return np.concatenate([self.cx, self.cy])
        return np.concatenate([self.cx, self.cy, self.cz])

    @classmethod
    def from_vector(cls, vec, order: int, planar: bool = False) -> "MotionCoefficients":
        """Rebuild coefficients from a free parameter vector."""
        vec = np.asarray(vec, dtype=float)
        p = order + 1
        expected = (2 if planar else 3) * p
        if vec.shape != (expected,):
            raise ValueError(f"expected vector of length {expected}, got shape {vec.shape}")
        cz = None if planar else vec[2 * p : 3 * p]
        return cls(cx=vec[0:p], cy=vec[p : 2 * p], cz=cz, planar=planar)

    def parameter_names(self) -> list[str]:
        """Names for the free parameters, e.g. x0, x1, x2, y0, ..."""
        axes = "xy" if self.planar else "xyz"
        return [f"{ax}{q}" for ax in axes for q in range(self.order + 1)]

    def parameter_units(self) -> list[str]:
        units = ["m", "m/s"] + [f"m/s^{q}" for q in range(2, self.order + 1)]
        units = units[: self.order + 1]
        n_axes = 2 if self.planar else 3
        return units * n_axes


@dataclass(frozen=True)
class RadarParams:
    """Radar constants and the slow-time sampling grid.

    Parameters
    ----------
    carrier_frequency : float
        Carrier f_c in Hz.
    propagation_speed : float
        Wave propagation speed c in m/s.
    snapshot_interval : float
        Time between successive virtual snapshots (one per coherent
        integration interval), seconds.
    snapshot_count : int
        Number of snapshots K; snapshot k is taken at time k * snapshot_interval,
        k = 0..K-1.
    energy_ratio : float
        Transmit amplitude sqrt(E/M) applied to every path.
    """

    carrier_frequency: float
    propagation_speed: float
    snapshot_interval: float
    snapshot_count: int
    energy_ratio: float = 1.0

    def __post_init__(self):
        if not self.carrier_frequency > 0:
            raise ValueError("carrier_frequency must be > 0")
        if not self.propagation_speed > 0:
            raise ValueError("propagation_speed must be > 0")
        if not self.snapshot_interval > 0:
            raise ValueError("snapshot_interval must be > 0")
        if int(self.snapshot_count) != self.snapshot_count or self.snapshot_count < 1:
            raise ValueError("snapshot_count must be a positive integer")
        if not self.energy_ratio > 0:
            raise ValueError("energy_ratio must be > 0")
        object.__setattr__(self, "snapshot_count", int(self.snapshot_count))

    def snapshot_times(self) -> np.ndarray:
        """Slow-time grid t_k = k * snapshot_interval, k = 0..K-1."""
        return np.arange(self.snapshot_count) * self.snapshot_interval


def polynomial_basis(times, order: int) -> np.ndarray:
    """Factorial-weighted monomial basis h_q(t) = t**q / q!.

    Parameters
    ----------
    times : array_like, shape (K,)
    order : int
        Polynomial order Q >= 0.

    Returns
    -------
    ndarray, shape (K, Q+1)
    """
    t = np.atleast_1d(np.asarray(times, dtype=float))
    cols = [t**q / math.factorial(q) for q in range(order + 1)]
    return np.stack(cols, axis=-1)


def eval_position(motion: MotionCoefficients, params: RadarParams, k) -> np.ndarray:
    """Target position at snapshot index k (may be fractional).

    Returns
    -------
    ndarray
        Shape (3,) for scalar k, else (len(k), 3).
    """
    t = np.asarray(k, dtype=float) * params.snapshot_interval
    h = polynomial_basis(t, motion.order)
    pos = np.stack([h @ motion.cx, h @ motion.cy, h @ motion.cz], axis=-1)
    return pos[0] if np.ndim(k) == 0 else pos


def path_ranges(geometry: AntennaGeometry, position, m: int, n: int):
    """Euclidean ranges (target to transmitter m, target to receiver n)."""
    pos = np.asarray(position, dtype=float)
    d_m = float(np.linalg.norm(pos - geometry.transmitters[m]))
    d_n = float(np.linalg.norm(pos - geometry.receivers[n]))
    return d_m, d_n


def path_delay(geometry: AntennaGeometry, motion: MotionCoefficients,
               params: RadarParams, m: int, n: int, k) -> float:
    """Two-leg propagation delay (d_m + d_n) / c for path (m, n) at snapshot k."""
    pos = eval_position(motion, params, k)
    d_m, d_n = path_ranges(geometry, pos, m, n)
    return (d_m + d_n) / params.propagation_speed


def instantaneous_doppler(geometry: AntennaGeometry, motion: MotionCoefficients,
                          params: RadarParams, m: int, n: int, k,
                          dt: float = 1e-4) -> float:
    """Doppler shift -f_c * d(tau)/dt of path (m, n) at time k * snapshot_interval.

    The derivative is a central finite difference with step ``dt`` seconds,
    which keeps the estimate valid for any polynomial order.  ``k`` may be
    fractional to address individual pulses inside an integration interval.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    step = dt / params.snapshot_interval  # in snapshot-index units
    tau_plus = path_delay(geometry, motion, params, m, n, float(k) + step)
    tau_minus = path_delay(geometry, motion, params, m, n, float(k) - step)
    return -params.carrier_frequency * (tau_plus - tau_minus) / (2.0 * dt)
