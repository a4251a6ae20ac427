"""Exact Fisher information and Cramer-Rao bounds for the snapshot model.

The data are K complex Gaussian snapshots with mean sqrt(E/M) T(k) b and
covariance sigma^2 I.  For such a model the Fisher information over the real
parameter vector theta = [psi, Re b, Im b] is

    F = (2 / sigma^2) * Re sum_k D(k)^H D(k),
    D(k) = d(mean(k)) / d(theta),

and the mean's derivatives factor into the steering phases T(k), the
per-path direction-cosine sums (the Z matrices below), the factorial time
basis, and the gains themselves.  The sqrt(E/M) amplitude enters squared,
giving the overall 2E/(sigma^2 M) scale.

The noise variance itself carries information only about sigma^2, not about
the mean, so its row of the full FIM is block-diagonal with respect to
(psi, b) and is excluded from the inversion here.

For planar scenes the z coefficients are pinned, their FIM rows/columns are
identically zero, and they are removed before inversion (the z block would
otherwise make F singular by construction).
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scene import AntennaGeometry, MotionCoefficients, RadarParams, eval_position, polynomial_basis
from .signal import steering_phases
from .validation import check_vector

__all__ = [
    "ZMatrices",
    "FimBlocks",
    "CrbResult",
    "z_matrices",
    "fim",
    "crb_psi",
    "compute_crb",
    "write_crb_csv",
]


@dataclass(frozen=True)
class ZMatrices:
    """Diagonals of the per-snapshot phase-derivative matrices.

    Entry p = n*M + m of ``zx`` is (-j 2 pi f_c / c) times the sum of the
    x direction cosines from the target to transmitter m and receiver n;
    ``zy`` and ``zz`` are the analogous y and z quantities.
    """

    zx: np.ndarray
    zy: np.ndarray
    zz: np.ndarray
    k: int


@dataclass(frozen=True)
class FimBlocks:
    """Fisher information blocks over (psi, Re b, Im b), common scale applied.

    ``psi_psi`` always covers the full three-axis coefficient vector of
    length 3(Q+1); planar pinning is resolved at inversion time.
    """

    psi_psi: np.ndarray  # (3(Q+1), 3(Q+1))
    psi_gain: np.ndarray  # (3(Q+1), 2MN)
    gain_gain: np.ndarray  # (2MN, 2MN)
    order: int
    planar: bool
    n_paths: int
    parameter_names: tuple
    parameter_units: tuple

    def assembled(self) -> np.ndarray:
        """Full symmetric FIM over the free parameters (z removed if planar)."""
        nf = len(self.parameter_names)
        f = np.block([
            [self.psi_psi[:nf, :nf], self.psi_gain[:nf, :]],
            [self.psi_gain[:nf, :].T, self.gain_gain],
        ])
        return 0.5 * (f + f.T)


@dataclass(frozen=True)
class CrbResult:
    """Inverse Fisher information and the motion-parameter bounds."""

    covariance: np.ndarray  # (n_free + 2MN) square
    psi_covariance: np.ndarray  # (n_free, n_free)
    psi_std: np.ndarray  # (n_free,)
    parameter_names: tuple
    parameter_units: tuple


def _direction_cosine_sums(geometry: AntennaGeometry, positions: np.ndarray) -> np.ndarray:
    """Per-path, per-axis sums of target->antenna direction cosines.

    Parameters
    ----------
    positions : ndarray, shape (K, 3)

    Returns
    -------
    ndarray, shape (K, MN, 3)
        Entry [k, n*M + m, axis] = (pos-tx_m)[axis]/d_m + (pos-rx_n)[axis]/d_n.
    """
    diff_tx = positions[:, None, :] - geometry.transmitters[None, :, :]  # (K, M, 3)
    diff_rx = positions[:, None, :] - geometry.receivers[None, :, :]  # (K, N, 3)
    d_tx = np.linalg.norm(diff_tx, axis=-1)  # (K, M)
    d_rx = np.linalg.norm(diff_rx, axis=-1)  # (K, N)
    if np.any(d_tx == 0.0) or np.any(d_rx == 0.0):
        raise ValueError("target coincides with an antenna; direction cosines "
                         "are undefined (zero range)")
    u_tx = diff_tx / d_tx[..., None]  # (K, M, 3)
    u_rx = diff_rx / d_rx[..., None]  # (K, N, 3)
    k = positions.shape[0]
    total = u_rx[:, :, None, :] + u_tx[:, None, :, :]  # (K, N, M, 3)
    return total.reshape(k, geometry.n_paths, 3)


def z_matrices(geometry: AntennaGeometry, motion: MotionCoefficients,
               params: RadarParams, k: int) -> ZMatrices:
    """Phase-derivative diagonals for snapshot k.

    Raises
    ------
    ValueError
        If the target position coincides with any antenna at snapshot k.
    """
    if not 0 <= k < params.snapshot_count:
        raise ValueError(f"snapshot index {k} outside 0..{params.snapshot_count - 1}")
    pos = eval_position(motion, params, k)[None, :]
    sums = _direction_cosine_sums(geometry, pos)[0]  # (MN, 3)
    coef = -2j * np.pi * params.carrier_frequency / params.propagation_speed
    return ZMatrices(zx=coef * sums[:, 0], zy=coef * sums[:, 1],
                     zz=coef * sums[:, 2], k=int(k))


def fim(geometry: AntennaGeometry, motion: MotionCoefficients,
        params: RadarParams, b, noise_variance: float) -> FimBlocks:
    """Fisher information blocks at the given motion truth and path gains.

    Parameters
    ----------
    b : array_like, shape (MN,)
        Complex path gains the information is evaluated at.
    noise_variance : float
        Complex noise power sigma^2 per sample, > 0.

    Returns
    -------
    FimBlocks
        Blocks already carry the 2E/(sigma^2 M) scale.  Per-snapshot terms
        are reduced in a fixed order so the result is reproducible.
    """
    b = check_vector(np.asarray(b, dtype=np.complex128), "b", geometry.n_paths)
    if not noise_variance > 0:
        raise ValueError("noise_variance must be > 0")
    n_coef = motion.order + 1
    mn = geometry.n_paths
    k_count = params.snapshot_count

    positions = eval_position(motion, params, np.arange(k_count))
    sums = _direction_cosine_sums(geometry, positions)  # (K, MN, 3)
    coef = -2j * np.pi * params.carrier_frequency / params.propagation_speed
    z = coef * sums  # (K, MN, 3)
    t = steering_phases(geometry, motion, params)  # (K, MN)
    h = polynomial_basis(params.snapshot_times(), motion.order)  # (K, Q+1)

    # d(mean)/d(psi_{axis,q})[p] = t_p * z_{axis,p} * b_p * h_q, stacked as
    # columns grouped x-then-y-then-z, each group ordered by q.
    core = t[:, :, None] * z * b[None, :, None]  # (K, MN, 3)
    d_psi = core[:, :, :, None] * h[:, None, None, :]  # (K, MN, 3, Q+1)
    d_psi = d_psi.reshape(k_count, mn, 3 * n_coef)

    a_pp = np.einsum("kpa,kpb->ab", d_psi.conj(), d_psi)
    # gain derivative is [diag(t), j diag(t)]: cross block columns are t-weighted
    g = np.einsum("kpa,kp->ap", d_psi.conj(), t)  # (3(Q+1), MN)
    a_pb = np.concatenate([g, 1j * g], axis=1)  # (3(Q+1), 2MN)
    # T^H T = I, so the gain block reduces to K copies of Re{[I jI]^H [I jI]}
    tt = np.einsum("kp,kp->p", t.conj(), t).real  # = K per path
    a_bb = np.zeros((2 * mn, 2 * mn))
    a_bb[np.arange(2 * mn), np.arange(2 * mn)] = np.concatenate([tt, tt])

    scale = 2.0 * params.energy_ratio**2 / noise_variance
    return FimBlocks(
        psi_psi=scale * a_pp.real,
        psi_gain=scale * a_pb.real,
        gain_gain=scale * a_bb,
        order=motion.order,
        planar=motion.planar,
        n_paths=mn,
        parameter_names=tuple(motion.parameter_names()),
        parameter_units=tuple(motion.parameter_units()),
    )


def crb_psi(blocks: FimBlocks) -> CrbResult:
    """Invert the assembled FIM and report motion-parameter bounds.

    The inversion covers the free motion coefficients plus the 2MN gain
    unknowns, so the reported psi block includes the information lost to
    the unknown gains.

    Raises
    ------
    ValueError
        If the assembled FIM is rank-deficient; the message names the
        null-space dimension.
    """
    f = blocks.assembled()
    dim = f.shape[0]
    eigvals = np.linalg.eigvalsh(f)
    tol = dim * np.finfo(float).eps * max(abs(eigvals[0]), abs(eigvals[-1]))
    n_null = int(np.sum(eigvals <= tol))
    if n_null > 0:
        raise ValueError(
            f"Fisher information is rank-deficient: null-space dimension {n_null} "
            f"of {dim} (unidentifiable parameter combination)")
    # Units spanning m to m/s^Q make the raw FIM artificially ill-conditioned;
    # invert the unit-diagonal rescaling D^-1 F D^-1 and scale back.
    d = np.sqrt(np.diag(f))
    scaled = f / d[:, None] / d[None, :]
    s_eig = np.linalg.eigvalsh(scaled)
    if s_eig[0] <= 0 or s_eig[-1] / s_eig[0] > 1e12:
        warnings.warn("Fisher information is ill-conditioned "
                      f"(condition number {s_eig[-1] / max(s_eig[0], 1e-300):.2e} "
                      "after unit rescaling); using a pseudo-inverse",
                      RuntimeWarning, stacklevel=2)
        cov_scaled = np.linalg.pinv(scaled, hermitian=True)
    else:
        cov_scaled = np.linalg.inv(scaled)
    cov = cov_scaled / d[:, None] / d[None, :]
    cov = 0.5 * (cov + cov.T)
    nf = len(blocks.parameter_names)
    psi_cov = cov[:nf, :nf]
    psi_var = np.maximum(np.diag(psi_cov), 0.0)
    return CrbResult(
        covariance=cov,
        psi_covariance=psi_cov,
        psi_std=np.sqrt(psi_var),
        parameter_names=blocks.parameter_names,
        parameter_units=blocks.parameter_units,
    )


def compute_crb(geometry: AntennaGeometry, motion: MotionCoefficients,
                params: RadarParams, b, noise_variance: float) -> CrbResult:
    """One-call FIM assembly plus inversion."""
    return crb_psi(fim(geometry, motion, params, b, noise_variance))


def write_crb_csv(result: CrbResult, path) -> None:
    """Write per-parameter bounds as CSV rows (parameter, unit, crb_std)."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["parameter", "unit", "crb_std"])
        for name, unit, std in zip(result.parameter_names,
                                   result.parameter_units, result.psi_std):
            writer.writerow([name, unit, repr(float(std))])
