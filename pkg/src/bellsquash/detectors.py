"""Photodetector outcome probabilities and coincidence aggregation.

All four detectors share one efficiency and one mean noise-count number.
Noise counts are Poissonian and independent between detectors.
"""

from __future__ import annotations

from dataclasses import dataclass
import enum
import math

import numpy as np

from .fock import JointPhotonDistribution

CHANNEL_PAIRS = (("T", "T"), ("R", "R"), ("T", "R"), ("R", "T"))


class PostprocessingModel(enum.Enum):
    NAIVE_ON_OFF = "onoff-naive"
    SQUASH_ON_OFF = "onoff-squash"
    PHOTON_NUMBER_RESOLVING = "pnr"


@dataclass(frozen=True)
class DetectorParams:
    eta: float
    n_nc: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.eta <= 1.0):
            raise ValueError(f"eta must lie in [0, 1], got {self.eta!r}")
        if not (self.n_nc >= 0.0) or not math.isfinite(self.n_nc):
            raise ValueError(f"n_nc must be non-negative, got {self.n_nc!r}")


@dataclass(frozen=True)
class CoincidenceProbabilities:
    """Joint click probabilities keyed by ``(site A channel, site B channel)``."""

    p: dict

    def __getitem__(self, key):
        return self.p[key]

    @property
    def same(self) -> float:
        return self.p[("T", "T")] + self.p[("R", "R")]

    @property
    def different(self) -> float:
        return self.p[("T", "R")] + self.p[("R", "T")]

    def total(self) -> float:
        return sum(self.p.values())


def detector_response(m: int, n: int, params: DetectorParams) -> float:
    """Probability that a detector hit by ``m`` photons registers ``n`` counts.

    Binomial photon loss convolved with a Poissonian noise-count number.
    """
    if m < 0 or n < 0:
        raise ValueError("photon and count numbers must be non-negative")
    eta, nc = params.eta, params.n_nc
    total = 0.0
    for j in range(min(n, m) + 1):
        signal = math.comb(m, j) * eta**j * (1.0 - eta) ** (m - j)
        noise = math.exp(-nc) * nc ** (n - j) / math.factorial(n - j)
        total += signal * noise
    return total


def click_probability(m: int, params: DetectorParams) -> float:
    return 1.0 - (1.0 - params.eta) ** m * math.exp(-params.n_nc)


def _channel_tables(n: int, params: DetectorParams):
    """No-count, one-count and click probabilities for 0..n photons."""
    m = np.arange(n + 1)
    eta, nc = params.eta, params.n_nc
    loss = (1.0 - eta) ** m
    # (1-eta)**(m-1) with the m=0 term masked out by the factor m
    loss_m1 = np.where(m > 0, (1.0 - eta) ** np.maximum(m - 1, 0), 0.0)
    silent = loss * math.exp(-nc)
    single = (m * eta * loss_m1 + loss * nc) * math.exp(-nc)
    click = -np.expm1(m * np.log1p(-eta) - nc) if eta < 1.0 else _click_lossless(m, nc)
    return silent, single, click


def _click_lossless(m, nc):
    return np.where(m > 0, 1.0, -math.expm1(-nc))


def site_outcome_weights(
    n: int, params: DetectorParams, model: PostprocessingModel
) -> dict[str, np.ndarray]:
    """Per-site weight of reporting T or R, indexed by the T photon count.

    At count ``k`` the transmitted channel holds ``k`` photons and the
    reflected channel ``n - k``.
    """
    silent, single, click = _channel_tables(n, params)
    rev = slice(None, None, -1)
    if model is PostprocessingModel.NAIVE_ON_OFF:
        w_t = click * silent[rev]
        w_r = silent * click[rev]
    elif model is PostprocessingModel.SQUASH_ON_OFF:
        double = 0.5 * click * click[rev]
        w_t = click * silent[rev] + double
        w_r = silent * click[rev] + double
    elif model is PostprocessingModel.PHOTON_NUMBER_RESOLVING:
        w_t = single * silent[rev]
        w_r = silent * single[rev]
    else:
        raise ValueError(f"unknown model {model!r}")
    return {"T": w_t, "R": w_r}


def coincidence_probabilities(
    dist: JointPhotonDistribution, params: DetectorParams, model: PostprocessingModel
) -> CoincidenceProbabilities:
    acc = dict.fromkeys(CHANNEL_PAIRS, 0.0)
    for n, probs in enumerate(dist.blocks):
        w = site_outcome_weights(n, params, model)
        for i, j in CHANNEL_PAIRS:
            acc[(i, j)] += float(w[i] @ probs @ w[j])
    return CoincidenceProbabilities(acc)
