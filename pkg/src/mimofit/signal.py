"""Post-matched-filter snapshot model: steering phases, synthesis, SNR, file IO.

One virtual snapshot per coherent integration interval: the MN-vector of
matched-filter outputs r(k) = sqrt(E/M) * T(k) b + w(k), where T(k) is the
diagonal matrix of per-path propagation phases exp(-j 2 pi f_c tau_mn(k)),
b is the vector of complex path gains (constant over the observation, Swerling
I) and w(k) is circular complex white Gaussian noise of per-sample variance
sigma^2 (real and imaginary parts i.i.d. with variance sigma^2 / 2).

Path ordering everywhere is ``n * M + m`` (transmitter index fastest).

Snapshot files are binary, little-endian, and fully determined by their
inputs:

===========  ========  =====================================
offset       type      content
===========  ========  =====================================
0            8 bytes   magic ``b"MFSNAP01"``
8            u32       M (number of transmitters)
12           u32       N (number of receivers)
16           u32       K (number of snapshots)
20           f64       noise variance sigma^2
28           u64       RNG seed
36           f64[...]  interleaved re/im samples, k-major
                       then path index (2*K*M*N doubles)
===========  ========  =====================================
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scene import AntennaGeometry, MotionCoefficients, RadarParams, eval_position
from .validation import check_finite, check_snapshot_matrix, check_vector

__all__ = [
    "SteeringMatrix",
    "SnapshotSet",
    "steering_matrix",
    "delay_matrix",
    "steering_phases",
    "synthesize",
    "draw_reflection_vector",
    "snr_db",
    "noise_variance_for_snr",
    "save_snapshots",
    "load_snapshots",
]

_MAGIC = b"MFSNAP01"
_HEADER = struct.Struct("<III d Q")


@dataclass(frozen=True)
class SteeringMatrix:
    """Diagonal of the MN x MN per-snapshot phase matrix T(k).

    Entry ``n * M + m`` is exp(-j 2 pi f_c tau_mn(k)); every entry has unit
    modulus by construction.
    """

    diag: np.ndarray
    k: int


@dataclass(frozen=True)
class SnapshotSet:
    """K noisy virtual snapshots plus the metadata that produced them.

    ``data[k, p]`` is the matched-filter output of path p at snapshot k.
    """

    data: np.ndarray  # (K, MN) complex128
    n_tx: int
    n_rx: int
    noise_variance: float
    seed: int

    def __post_init__(self):
        data = check_snapshot_matrix(self.data, n_paths=self.n_tx * self.n_rx)
        data = data.copy()
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def n_snapshots(self) -> int:
        return self.data.shape[0]

    @property
    def n_paths(self) -> int:
        return self.data.shape[1]


def delay_matrix(geometry: AntennaGeometry, motion: MotionCoefficients,
                 params: RadarParams) -> np.ndarray:
    """Propagation delays tau for every snapshot and path.

    Returns
    -------
    ndarray, shape (K, MN)
        ``tau[k, n * M + m]`` in seconds.
    """
    pos = eval_position(motion, params, np.arange(params.snapshot_count))  # (K, 3)
    diff_tx = pos[:, None, :] - geometry.transmitters[None, :, :]  # (K, M, 3)
    diff_rx = pos[:, None, :] - geometry.receivers[None, :, :]  # (K, N, 3)
    d_tx = np.linalg.norm(diff_tx, axis=-1)  # (K, M)
    d_rx = np.linalg.norm(diff_rx, axis=-1)  # (K, N)
    total = d_rx[:, :, None] + d_tx[:, None, :]  # (K, N, M) -> flat index n*M+m
    return total.reshape(params.snapshot_count, -1) / params.propagation_speed


def steering_phases(geometry: AntennaGeometry, motion: MotionCoefficients,
                    params: RadarParams) -> np.ndarray:
    """Unit-modulus steering entries for all snapshots, shape (K, MN)."""
    tau = delay_matrix(geometry, motion, params)
    return np.exp(-2j * np.pi * params.carrier_frequency * tau)


def steering_matrix(geometry: AntennaGeometry, motion: MotionCoefficients,
                    params: RadarParams, k: int) -> SteeringMatrix:
    """Diagonal steering matrix T(k) for a single snapshot."""
    if not 0 <= k < params.snapshot_count:
        raise ValueError(f"snapshot index {k} outside 0..{params.snapshot_count - 1}")
    pos = eval_position(motion, params, k)
    d_tx = np.linalg.norm(pos[None, :] - geometry.transmitters, axis=-1)  # (M,)
    d_rx = np.linalg.norm(pos[None, :] - geometry.receivers, axis=-1)  # (N,)
    tau = (d_rx[:, None] + d_tx[None, :]).reshape(-1) / params.propagation_speed
    diag = np.exp(-2j * np.pi * params.carrier_frequency * tau)
    return SteeringMatrix(diag=diag, k=int(k))


def draw_reflection_vector(n_paths: int, seed: int) -> np.ndarray:
    """Unit-variance complex Gaussian path gains, fixed for a whole scenario.

    Deterministic and platform-independent given the seed (PCG64 stream).
    """
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((n_paths, 2))
    return (w[:, 0] + 1j * w[:, 1]) / math.sqrt(2.0)


def synthesize(geometry: AntennaGeometry, motion: MotionCoefficients,
               params: RadarParams, b, noise_variance: float,
               seed: int) -> SnapshotSet:
    """Generate the K noisy virtual snapshots of one trial.

    Parameters
    ----------
    b : array_like, shape (MN,)
        Complex path gains, held fixed across all snapshots.
    noise_variance : float
        Per-sample complex noise power sigma^2; zero gives exactly
        noiseless data.
    seed : int
        Seed of the noise stream.  Identical inputs yield bit-identical
        output.

    Returns
    -------
    SnapshotSet
    """
    b = check_vector(np.asarray(b, dtype=np.complex128), "b", geometry.n_paths)
    if not np.isfinite(noise_variance) or noise_variance < 0:
        raise ValueError("noise_variance must be finite and >= 0")
    phases = steering_phases(geometry, motion, params)  # (K, MN)
    data = params.energy_ratio * phases * b[None, :]
    if noise_variance > 0:
        rng = np.random.default_rng(seed)
        w = rng.standard_normal((params.snapshot_count, geometry.n_paths, 2))
        data = data + (w[..., 0] + 1j * w[..., 1]) * math.sqrt(noise_variance / 2.0)
    return SnapshotSet(data=data, n_tx=geometry.n_tx, n_rx=geometry.n_rx,
                       noise_variance=float(noise_variance), seed=int(seed))


def snr_db(params: RadarParams, b, noise_variance: float) -> float:
    """Per-sample SNR 10 log10((E/M) * mean|b_p|^2 / sigma^2) in dB."""
    b = np.asarray(b, dtype=np.complex128)
    check_finite(b, "b")
    if not noise_variance > 0:
        raise ValueError("noise_variance must be > 0 (zero noise has infinite SNR)")
    signal_power = params.energy_ratio**2 * float(np.mean(np.abs(b) ** 2))
    return 10.0 * math.log10(signal_power / noise_variance)


def noise_variance_for_snr(params: RadarParams, b, snr: float) -> float:
    """Noise variance sigma^2 that realizes a requested per-sample SNR in dB."""
    b = np.asarray(b, dtype=np.complex128)
    signal_power = params.energy_ratio**2 * float(np.mean(np.abs(b) ** 2))
    return signal_power / 10.0 ** (snr / 10.0)


def save_snapshots(snapshots: SnapshotSet, path) -> None:
    """Write a SnapshotSet to the binary format described in the module docs."""
    path = Path(path)
    header = _MAGIC + _HEADER.pack(snapshots.n_tx, snapshots.n_rx,
                                   snapshots.n_snapshots,
                                   snapshots.noise_variance, snapshots.seed)
    body = np.empty((snapshots.n_snapshots, snapshots.n_paths, 2), dtype="<f8")
    body[..., 0] = snapshots.data.real
    body[..., 1] = snapshots.data.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body.tobytes())


def load_snapshots(path) -> SnapshotSet:
    """Read a snapshot file written by :func:`save_snapshots`."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < len(_MAGIC) + _HEADER.size or raw[: len(_MAGIC)] != _MAGIC:
        raise ValueError(f"{path}: not a snapshot file (bad magic)")
    m, n, k, sigma2, seed = _HEADER.unpack_from(raw, len(_MAGIC))
    expected = len(_MAGIC) + _HEADER.size + 16 * k * m * n
    if len(raw) != expected:
        raise ValueError(f"{path}: truncated snapshot file "
                         f"(expected {expected} bytes, found {len(raw)})")
    body = np.frombuffer(raw, dtype="<f8", offset=len(_MAGIC) + _HEADER.size)
    body = body.reshape(k, m * n, 2)
    data = body[..., 0] + 1j * body[..., 1]
    return SnapshotSet(data=data, n_tx=m, n_rx=n, noise_variance=sigma2, seed=seed)
