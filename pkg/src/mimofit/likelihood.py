"""Concentrated maximum-likelihood objective for the motion coefficients.

With the path gains b eliminated in closed form, maximizing the likelihood
over the motion coefficients psi reduces to maximizing

    positive_ll(psi) = || sum_k T^H(k; psi) r(k) ||^2

which is the production objective.  The equivalent least-squares projection
form (project the stacked data onto the column space of the stacked steering
matrices) costs an MN x MN inverse per candidate and is kept only as a
cross-check oracle.

All evaluations are pure functions of immutable context, so they can be
batched over candidate parameter vectors and run concurrently.
"""

from __future__ import annotations

import numpy as np

from .scene import AntennaGeometry, MotionCoefficients, RadarParams, polynomial_basis
from .signal import SnapshotSet, steering_phases
from .validation import check_snapshot_matrix, check_vector

__all__ = ["ConcentratedObjective"]


class ConcentratedObjective:
    """Evaluation context binding one snapshot set to a motion model family.

    Parameters
    ----------
    geometry : AntennaGeometry
    params : RadarParams
    order : int
        Polynomial order Q of the candidate motion model.
    snapshots : SnapshotSet or ndarray (K, MN)
        Observed virtual data vectors.
    planar : bool
        If True, candidate vectors carry only x and y coefficients and z is
        pinned to zero.
    """

    def __init__(self, geometry: AntennaGeometry, params: RadarParams,
                 order: int, snapshots, planar: bool = False):
        if order < 0:
            raise ValueError("order must be >= 0")
        data = snapshots.data if isinstance(snapshots, SnapshotSet) else snapshots
        self.geometry = geometry
        self.params = params
        self.order = int(order)
        self.planar = bool(planar)
        self.data = check_snapshot_matrix(data, n_paths=geometry.n_paths,
                                          n_snapshots=params.snapshot_count)
        self.n_free = (2 if planar else 3) * (order + 1)
        # Per-candidate work only ever recomputes delays; everything that does
        # not depend on the candidate is fixed here.
        self._basis = polynomial_basis(params.snapshot_times(), order)  # (K, Q+1)
        self._tx = geometry.transmitters  # (M, 3)
        self._rx = geometry.receivers  # (N, 3)
        self._wavenumber = 2.0 * np.pi * params.carrier_frequency / params.propagation_speed
        self._total_energy = float(np.sum(np.abs(self.data) ** 2))

    @property
    def total_energy(self) -> float:
        """sum_k ||r(k)||^2, the zero-model residual."""
        return self._total_energy

    # ------------------------------------------------------------------
    # candidate geometry
    # ------------------------------------------------------------------

    def _coefficients(self, psi_batch: np.ndarray):
        """Split (n, n_free) candidate vectors into per-axis coefficients."""
        p = self.order + 1
        cx = psi_batch[:, 0:p]
        cy = psi_batch[:, p : 2 * p]
        if self.planar:
            cz = np.zeros_like(cx)
        else:
            cz = psi_batch[:, 2 * p : 3 * p]
        return cx, cy, cz

    def _batch_phase_sums(self, psi_batch: np.ndarray) -> np.ndarray:
        """v_p = sum_k conj(T_pp(k)) r_p(k) for each candidate; shape (n, MN)."""
        cx, cy, cz = self._coefficients(psi_batch)
        pos = np.stack([cx @ self._basis.T, cy @ self._basis.T, cz @ self._basis.T],
                       axis=-1)  # (n, K, 3)
        d_tx = np.linalg.norm(pos[:, :, None, :] - self._tx[None, None, :, :], axis=-1)
        d_rx = np.linalg.norm(pos[:, :, None, :] - self._rx[None, None, :, :], axis=-1)
        n, k = pos.shape[0], pos.shape[1]
        total = (d_rx[:, :, :, None] + d_tx[:, :, None, :]).reshape(n, k, -1)
        # conj(exp(-j * 2 pi f_c * tau)) = exp(+j * wavenumber * range_sum)
        rotated = np.exp(1j * self._wavenumber * total)
        return np.einsum("nkp,kp->np", rotated, self.data)

    def _phase_sum(self, psi) -> np.ndarray:
        psi = check_vector(psi, "psi", self.n_free).astype(float)
        return self._batch_phase_sums(psi[None, :])[0]

    # ------------------------------------------------------------------
    # objective forms
    # ------------------------------------------------------------------

    def positive_ll_batch(self, psi_batch) -> np.ndarray:
        """Objective || sum_k T^H(k) r(k) ||^2 for many candidates at once.

        Parameters
        ----------
        psi_batch : array_like, shape (n, n_free)

        Returns
        -------
        ndarray, shape (n,)
        """
        psi_batch = np.atleast_2d(np.asarray(psi_batch, dtype=float))
        if psi_batch.shape[1] != self.n_free:
            raise ValueError(f"candidates must have {self.n_free} parameters, "
                             f"got {psi_batch.shape[1]}")
        v = self._batch_phase_sums(psi_batch)
        return np.sum(np.abs(v) ** 2, axis=1)

    def positive_ll(self, psi) -> float:
        """Objective value for a single candidate (higher is better)."""
        return float(np.sum(np.abs(self._phase_sum(psi)) ** 2))

    def concentrated_negative_ll(self, psi) -> float:
        """Negative log-likelihood with b at its closed-form optimum."""
        return self.total_energy - self.positive_ll(psi) / self.params.snapshot_count

    def concentrate(self, psi) -> np.ndarray:
        """Closed-form path-gain estimate b_hat = (1/K) sqrt(M/E) sum_k T^H(k) r(k)."""
        v = self._phase_sum(psi)
        return v / (self.params.snapshot_count * self.params.energy_ratio)

    def negative_ll(self, psi, b) -> float:
        """Full negative log-likelihood sum_k ||r(k) - sqrt(E/M) T(k) b||^2."""
        b = check_vector(np.asarray(b, dtype=np.complex128), "b", self.geometry.n_paths)
        phases = self._candidate_phases(psi)
        resid = self.data - self.params.energy_ratio * phases * b[None, :]
        return float(np.sum(np.abs(resid) ** 2))

    def projection_objective(self, psi) -> float:
        """Cross-check oracle: energy of the data projected onto the steering span.

        Builds the stacked (K*MN, MN) steering matrix Q explicitly and
        evaluates r~^H Q (Q^H Q)^{-1} Q^H r~ with a generic inverse.  Equals
        ``positive_ll(psi) / K`` up to rounding; production code uses the
        norm form, which avoids the MN x MN inverse.
        """
        phases = self._candidate_phases(psi)  # (K, MN), rows are diag(T(k))
        k, mn = phases.shape
        q = np.zeros((k * mn, mn), dtype=np.complex128)
        rows = np.arange(k * mn)
        q[rows, rows % mn] = phases.reshape(-1)
        r_stacked = self.data.reshape(-1)
        gram_inv = np.linalg.inv(q.conj().T @ q)
        v = q.conj().T @ r_stacked
        return float(np.real(v.conj() @ (gram_inv @ v)))

    def _candidate_phases(self, psi) -> np.ndarray:
        """Steering entries exp(-j w tau) of a candidate, shape (K, MN)."""
        psi = check_vector(psi, "psi", self.n_free).astype(float)
        motion = MotionCoefficients.from_vector(psi, self.order, self.planar)
        return steering_phases(self.geometry, motion, self.params)
