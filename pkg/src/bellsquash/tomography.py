"""Linear reconstruction of an effective two-qubit state from nine
polarization correlation coefficients.

Each site measures along three (generally non-orthogonal) Bloch directions
``(sin 2theta cos phi, sin 2theta sin phi, cos 2theta)``. The dual operators
built from the inverse Gram matrix expand the traceless part of the state.
Positivity of the result is *not* enforced.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .chsh import PipelineCorrelator
from .detectors import DetectorParams, PostprocessingModel
from .fock import AnalyzerSetting, PdcSource

DEGENERACY_THRESHOLD = 1e-10


class DegenerateBasisError(ValueError):
    pass


@dataclass(frozen=True)
class TomographyBasis:
    """Three analyzer settings per site."""

    site_a: tuple[AnalyzerSetting, AnalyzerSetting, AnalyzerSetting]
    site_b: tuple[AnalyzerSetting, AnalyzerSetting, AnalyzerSetting]


@dataclass(frozen=True)
class MetricTensor:
    g: np.ndarray
    g_inverse: np.ndarray


@dataclass(frozen=True)
class TwoQubitDensityMatrix:
    rho: np.ndarray
    eigenvalues: np.ndarray

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])


def _site(theta: float, phi: float) -> AnalyzerSetting:
    return AnalyzerSetting(theta, phi)


_ORTHOGONAL = (_site(math.pi / 4, 0.0), _site(math.pi / 4, math.pi / 2), _site(0.0, 0.0))

# Angle lists as printed for the two figure presets, not reduced mod pi.
PRESETS = {
    "fig4a": TomographyBasis(_ORTHOGONAL, _ORTHOGONAL),
    "fig4b": TomographyBasis(
        (_site(math.pi / 8, 0.0), _site(9 * math.pi / 4, math.pi / 2), _site(math.pi, 0.0)),
        (_site(3 * math.pi / 15, 0.0), _site(-math.pi / 24, math.pi / 2), _site(math.pi, 0.0)),
    ),
}


def bloch_direction(setting: AnalyzerSetting) -> np.ndarray:
    s2 = math.sin(2 * setting.theta)
    return np.array(
        [s2 * math.cos(setting.phi), s2 * math.sin(setting.phi), math.cos(2 * setting.theta)]
    )


def direction_operator(setting: AnalyzerSetting) -> np.ndarray:
    """Observable ``T - R`` of one analyzer in the (H, V) qubit basis."""
    c2, s2 = math.cos(2 * setting.theta), math.sin(2 * setting.theta)
    off = s2 * np.exp(1j * setting.phi)
    return np.array([[c2, off.conjugate()], [off, -c2]])


def inverse_3x3(m: np.ndarray) -> np.ndarray:
    """Adjugate inverse; raises if ``|det m|`` is at or below the degeneracy threshold."""
    adj = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            rows = [r for r in range(3) if r != j]
            cols = [c for c in range(3) if c != i]
            minor = m[np.ix_(rows, cols)]
            adj[i, j] = (-1) ** (i + j) * (minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    det = float(m[0] @ adj[:, 0])
    if abs(det) <= DEGENERACY_THRESHOLD:
        raise DegenerateBasisError(f"measurement directions are not independent (det={det:.3g})")
    return adj / det


def metric_tensor(settings) -> MetricTensor:
    dirs = np.array([bloch_direction(s) for s in settings])
    g_inv = np.empty((3, 3))
    for k, sk in enumerate(settings):
        for i, si in enumerate(settings):
            g_inv[k, i] = math.cos(2 * si.theta) * math.cos(2 * sk.theta) + math.sin(
                2 * si.theta
            ) * math.sin(2 * sk.theta) * math.cos(si.phi - sk.phi)
    # Gram matrix of the Bloch directions, written out entrywise above
    assert np.allclose(g_inv, dirs @ dirs.T, atol=1e-12)
    return MetricTensor(inverse_3x3(g_inv), g_inv)


def xi_matrix(settings, metric: MetricTensor, i: int) -> np.ndarray:
    """Dual operator of direction ``i`` (0-based): ``Tr(xi_i sigma_k) = 2 delta_ik``."""
    return sum(metric.g[k, i] * direction_operator(s) for k, s in enumerate(settings))


def measure_correlation_matrix(
    source: PdcSource,
    params: DetectorParams,
    model: PostprocessingModel,
    basis: TomographyBasis,
    correlator: PipelineCorrelator | None = None,
) -> np.ndarray:
    if correlator is None:
        correlator = PipelineCorrelator(source, params, model)
    return np.array(
        [[correlator.correlation(sa, sb) for sb in basis.site_b] for sa in basis.site_a]
    )


def reconstruct_density(
    e: np.ndarray,
    basis: TomographyBasis,
    metrics: tuple[MetricTensor, MetricTensor] | None = None,
) -> TwoQubitDensityMatrix:
    if metrics is None:
        metrics = (metric_tensor(basis.site_a), metric_tensor(basis.site_b))
    xi_a = [xi_matrix(basis.site_a, metrics[0], i) for i in range(3)]
    xi_b = [xi_matrix(basis.site_b, metrics[1], j) for j in range(3)]
    rho = np.eye(4, dtype=complex) / 4
    for i in range(3):
        for j in range(3):
            rho += 0.25 * e[i, j] * np.kron(xi_a[i], xi_b[j])
    # symmetrize away rounding so the eigensolver sees an exactly Hermitian matrix
    rho = 0.5 * (rho + rho.conj().T)
    return TwoQubitDensityMatrix(rho, np.linalg.eigvalsh(rho))


def reconstruct_from_pipeline(
    source: PdcSource,
    params: DetectorParams,
    model: PostprocessingModel,
    basis: TomographyBasis,
) -> TwoQubitDensityMatrix:
    e = measure_correlation_matrix(source, params, model, basis)
    return reconstruct_density(e, basis)
