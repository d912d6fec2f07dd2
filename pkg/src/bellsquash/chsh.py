"""Correlation coefficients, the CHSH combination and its maximization over
analyzer angles."""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import minimize

from .detectors import (
    CHANNEL_PAIRS,
    CoincidenceProbabilities,
    DetectorParams,
    PostprocessingModel,
    site_outcome_weights,
)
from .fock import (
    AnalyzerSetting,
    PdcSource,
    _rotation_eigensystem,
    build_pdc_state,
    sector_unitary,
)

TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)
NO_COINCIDENCE_FLOOR = 1e-300
GRID_POINTS = 64
SHIFT_TOLERANCE = 1e-10


class NoCoincidenceError(ArithmeticError):
    """Raised when no coincidences are registered, so the correlation is undefined."""


def correlation(probs: CoincidenceProbabilities) -> float:
    total = probs.same + probs.different
    if total <= NO_COINCIDENCE_FLOOR:
        raise NoCoincidenceError("no coincidences at this setting")
    return (probs.same - probs.different) / total


def bell_parameter(e11: float, e12: float, e22: float, e21: float) -> float:
    return abs(e11 - e12) + abs(e22 + e21)


class PipelineCorrelator:
    """Coincidence probabilities of a fixed source, detectors and
    postprocessing, evaluated for arbitrary analyzer settings.

    Block amplitudes and per-site outcome weights are computed once; each
    call only applies the analyzer rotations.
    """

    def __init__(self, source: PdcSource, params: DetectorParams, model: PostprocessingModel):
        self.source = source
        self.params = params
        self.model = model
        self._blocks = build_pdc_state(source)
        self._weights = [site_outcome_weights(b.n, params, model) for b in self._blocks]

    def coincidences(
        self, setting_a: AnalyzerSetting, setting_b: AnalyzerSetting
    ) -> CoincidenceProbabilities:
        acc = dict.fromkeys(CHANNEL_PAIRS, 0.0)
        for block, w in zip(self._blocks, self._weights):
            u_a = sector_unitary(block.n, setting_a)
            u_b = sector_unitary(block.n, setting_b)
            probs = block.weight * np.abs(u_a @ block.amplitudes @ u_b.T) ** 2
            for i, j in CHANNEL_PAIRS:
                acc[(i, j)] += float(w[i] @ probs @ w[j])
        return CoincidenceProbabilities(acc)

    def correlation(self, setting_a: AnalyzerSetting, setting_b: AnalyzerSetting) -> float:
        return correlation(self.coincidences(setting_a, setting_b))

    def correlation_at(self, theta_a: float, theta_b: float) -> float:
        return self.correlation(AnalyzerSetting(theta_a), AnalyzerSetting(theta_b))

    def coincidences_by_difference(self, deltas) -> np.ndarray:
        """Coincidences at ``theta_A = delta``, ``theta_B = 0``, vectorized over ``deltas``.

        Returns an array of shape ``(len(deltas), 2, 2)`` indexed
        ``[delta, A channel, B channel]`` with channel order (T, R).
        """
        deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
        acc = np.zeros((deltas.size, 2, 2))
        for block, w in zip(self._blocks, self._weights):
            vals, vecs = _rotation_eigensystem(block.n)
            phases = np.exp(1j * deltas[:, None] * vals[None, :])
            u = (vecs[None, :, :] * phases[:, None, :]) @ vecs.conj().T
            # the unrotated block is anti-diagonal with entries of modulus 1/sqrt(n+1)
            probs = (block.weight / (block.n + 1)) * np.abs(u[:, :, ::-1]) ** 2
            w_site = np.stack([w["T"], w["R"]])
            acc += np.einsum("ik,dkm,jm->dij", w_site, probs, w_site)
        return acc

    def correlations_by_difference(self, deltas) -> np.ndarray:
        """Correlations for an array of angle differences; NaN where undefined."""
        acc = self.coincidences_by_difference(deltas)
        same = acc[:, 0, 0] + acc[:, 1, 1]
        total = acc.sum(axis=(1, 2))
        with np.errstate(invalid="ignore", divide="ignore"):
            e = (2.0 * same - total) / total
        e[total <= NO_COINCIDENCE_FLOOR] = np.nan
        return e


@dataclass(frozen=True)
class BellSettings:
    theta_a1: float
    theta_a2: float
    theta_b1: float
    theta_b2: float

    @classmethod
    def canonical(cls, a1, a2, b1, b2) -> "BellSettings":
        return cls(*(float(np.mod(x, math.pi)) for x in (a1, a2, b1, b2)))


@dataclass(frozen=True)
class BellResult:
    bell_value: float
    settings: BellSettings
    correlations: tuple[float, float, float, float]  # E11, E12, E22, E21
    model: PostprocessingModel


def bell_from_settings(correlator: PipelineCorrelator, s: BellSettings) -> BellResult:
    e11 = correlator.correlation_at(s.theta_a1, s.theta_b1)
    e12 = correlator.correlation_at(s.theta_a1, s.theta_b2)
    e22 = correlator.correlation_at(s.theta_a2, s.theta_b2)
    e21 = correlator.correlation_at(s.theta_a2, s.theta_b1)
    return BellResult(
        bell_parameter(e11, e12, e22, e21), s, (e11, e12, e22, e21), correlator.model
    )


def depends_on_difference_only(correlator: PipelineCorrelator) -> bool:
    """Check that shifting both analyzer angles by a common offset leaves E unchanged."""
    probes = [(0.3, 0.1), (1.2, 2.9)]
    for theta_a, theta_b in probes:
        ref = correlator.correlation_at(theta_a, theta_b)
        for shift in (0.7, 1.9):
            if abs(correlator.correlation_at(theta_a + shift, theta_b + shift) - ref) > SHIFT_TOLERANCE:
                return False
    return True


def _safe_correlation(correlator, theta_a, theta_b) -> float:
    try:
        return correlator.correlation_at(theta_a, theta_b)
    except NoCoincidenceError:
        return math.nan


def _refine(objective, x0, step, max_evals=2000):
    simplex = np.vstack([x0] + [x0 + step * e for e in np.eye(len(x0))])
    res = minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "xatol": 1e-8,
            "fatol": 1e-8 * abs(objective(x0)),
            "maxfev": max_evals,
        },
    )
    return res.x, -res.fun


def _settings_from_differences(d11, d12, d21) -> BellSettings:
    # theta_A1 = 0 fixes the global rotation; d22 = d21 + d12 - d11 follows
    return BellSettings.canonical(0.0, d21 - d11, -d11, -d12)


def _maximize_reduced(correlator: PipelineCorrelator) -> BellSettings:
    grid = np.arange(GRID_POINTS) * math.pi / GRID_POINTS
    e = correlator.correlations_by_difference(grid)
    if np.all(np.isnan(e)):
        raise NoCoincidenceError("no coincidences at any grid setting")
    i, j, l = np.meshgrid(*(np.arange(GRID_POINTS),) * 3, indexing="ij")
    m = (j + l - i) % GRID_POINTS
    scores = np.abs(e[i] - e[j]) + np.abs(e[m] + e[l])
    best = np.unravel_index(np.nanargmax(scores), scores.shape)
    x0 = grid[list(best)]
    grid_best = float(scores[best])

    def objective(x):
        d11, d12, d21 = x
        e11, e12, e22, e21 = correlator.correlations_by_difference(
            [d11, d12, d21 + d12 - d11, d21]
        )
        value = bell_parameter(e11, e12, e22, e21)
        return math.inf if math.isnan(value) else -value

    x, value = _refine(objective, x0, math.pi / GRID_POINTS)
    if not value > grid_best:
        x = x0
    return _settings_from_differences(*x)


def _maximize_full(correlator: PipelineCorrelator, points: int = 16) -> BellSettings:
    grid = np.arange(points) * math.pi / points
    e = np.array([[_safe_correlation(correlator, a, b) for b in grid] for a in grid])
    if np.all(np.isnan(e)):
        raise NoCoincidenceError("no coincidences at any grid setting")
    a1, a2, b1, b2 = np.meshgrid(*(np.arange(points),) * 4, indexing="ij")
    scores = np.abs(e[a1, b1] - e[a1, b2]) + np.abs(e[a2, b2] + e[a2, b1])
    best = np.unravel_index(np.nanargmax(scores), scores.shape)
    x0 = grid[list(best)]
    grid_best = float(scores[best])

    def objective(x):
        try:
            return -bell_from_settings(correlator, BellSettings(*x)).bell_value
        except NoCoincidenceError:
            return math.inf

    x, value = _refine(objective, x0, math.pi / points)
    if not value > grid_best:
        x = x0
    return BellSettings.canonical(*x)


def maximize_bell(
    source: PdcSource, params: DetectorParams, model: PostprocessingModel
) -> BellResult:
    """Largest CHSH value over the four analyzer angles (phases fixed at zero).

    A 64-point-per-axis grid over the angle differences is followed by a
    Nelder-Mead refinement. The reduction to differences is used only after
    the pipeline passes a common-shift invariance check.
    """
    correlator = PipelineCorrelator(source, params, model)
    if depends_on_difference_only(correlator):
        settings = _maximize_reduced(correlator)
    else:
        settings = _maximize_full(correlator)
    return bell_from_settings(correlator, settings)
