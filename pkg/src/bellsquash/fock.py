"""Truncated Fock representation of the down-conversion source and the
polarization analyzers.

The four-mode state is stored block by block: block ``n`` holds the
``n``-pair component, in which each site carries exactly ``n`` photons.
A block is an ``(n+1, n+1)`` amplitude array indexed by the photon count
in the *first* mode of each site (H before the analyzer, T after it); the
second mode holds the remaining ``n - k`` photons.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np

DEFAULT_TAIL_TOLERANCE = 1e-12
MAX_PAIRS = 2000


@dataclass(frozen=True)
class PdcSource:
    """Down-conversion source parameterized by ``tanh(chi)``.

    ``cutoff`` is either a fixed maximal pair number or ``None`` for the
    adaptive policy, in which case the smallest pair number whose neglected
    tail weight is at most ``tail_tolerance`` is used.
    """

    tanh_chi: float
    cutoff: int | None = None
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE

    def __post_init__(self):
        if not (0.0 <= self.tanh_chi < 1.0) or not math.isfinite(self.tanh_chi):
            raise ValueError(f"tanh_chi must lie in [0, 1), got {self.tanh_chi!r}")
        if self.cutoff is not None and self.cutoff < 0:
            raise ValueError(f"cutoff must be non-negative, got {self.cutoff!r}")
        if not (0.0 < self.tail_tolerance < 1.0):
            raise ValueError("tail_tolerance must lie in (0, 1)")

    @property
    def max_pairs(self) -> int:
        if self.cutoff is not None:
            return self.cutoff
        return adaptive_cutoff(self.tanh_chi, self.tail_tolerance)


@dataclass(frozen=True)
class AnalyzerSetting:
    """Half-wave-plate angle ``theta`` and H-mode phase shift ``phi`` (radians)."""

    theta: float
    phi: float = 0.0


@dataclass(frozen=True)
class PairBlockState:
    n: int
    amplitudes: np.ndarray
    weight: float


@dataclass(frozen=True)
class JointPhotonDistribution:
    """Photon-number statistics of the four analyzer output channels.

    ``blocks[n][k_A, k_B]`` is the probability of ``(k_A, n-k_A, k_B, n-k_B)``
    photons in ``(T_A, R_A, T_B, R_B)``, already multiplied by the pair weight.
    """

    blocks: tuple[np.ndarray, ...]
    truncation_deficit: float
    entries: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        entries = {}
        for n, probs in enumerate(self.blocks):
            for k_a in range(n + 1):
                for k_b in range(n + 1):
                    entries[(k_a, n - k_a, k_b, n - k_b)] = float(probs[k_a, k_b])
        object.__setattr__(self, "entries", entries)

    def total(self) -> float:
        return float(sum(b.sum() for b in self.blocks))


def pair_weight(tanh_chi: float, n: int) -> float:
    """Probability of the ``n``-pair component, (n+1) t^{2n} (1-t^2)^2."""
    t2 = tanh_chi * tanh_chi
    return (n + 1) * t2**n * (1.0 - t2) ** 2


def tail_weight(tanh_chi: float, max_pairs: int) -> float:
    """Total weight of all blocks beyond ``max_pairs`` (closed geometric tail)."""
    x = tanh_chi * tanh_chi
    return x ** (max_pairs + 1) * ((max_pairs + 2) - (max_pairs + 1) * x)


def adaptive_cutoff(tanh_chi: float, tolerance: float = DEFAULT_TAIL_TOLERANCE) -> int:
    n = 0
    while tail_weight(tanh_chi, n) > tolerance:
        n += 1
        if n > MAX_PAIRS:
            raise ValueError(f"tanh_chi={tanh_chi} needs more than {MAX_PAIRS} pairs")
    return n


def build_pdc_state(source: PdcSource) -> list[PairBlockState]:
    blocks = []
    for n in range(source.max_pairs + 1):
        amp = np.zeros((n + 1, n + 1), dtype=complex)
        # |n-m>_HA |m>_VA |m>_HB |n-m>_VB with sign (-1)^m
        for m in range(n + 1):
            amp[n - m, m] = (-1) ** m / math.sqrt(n + 1)
        blocks.append(PairBlockState(n, amp, pair_weight(source.tanh_chi, n)))
    return blocks


@lru_cache(maxsize=None)
def _rotation_eigensystem(n: int) -> tuple[np.ndarray, np.ndarray]:
    # Generator a_H^dag a_V - a_V^dag a_H on the basis |k, n-k>, k = H count.
    gen = np.zeros((n + 1, n + 1))
    for k in range(n):
        # a_H^dag a_V |k, n-k> = sqrt((k+1)(n-k)) |k+1, n-k-1>
        c = math.sqrt((k + 1) * (n - k))
        gen[k + 1, k] = c
        gen[k, k + 1] = -c
    vals, vecs = np.linalg.eigh(-1j * gen)
    # the spectrum is exactly {-n, -n+2, ..., n}
    vals = np.round(vals)
    vecs.setflags(write=False)
    return vals, vecs


def sector_unitary(n: int, setting: AnalyzerSetting) -> np.ndarray:
    """Matrix of the analyzer acting on one site's ``n``-photon sector.

    Column ``a`` is the image of ``|a>_H |n-a>_V``; row ``k`` is the
    coefficient of ``|k>_T |n-k>_R``.
    """
    vals, vecs = _rotation_eigensystem(n)
    rot = (vecs * np.exp(1j * setting.theta * vals)) @ vecs.conj().T
    if setting.phi:
        rot = rot * np.exp(1j * setting.phi * np.arange(n + 1))[None, :]
    return rot


def apply_analyzer(
    block: PairBlockState, setting_a: AnalyzerSetting, setting_b: AnalyzerSetting
) -> PairBlockState:
    u_a = sector_unitary(block.n, setting_a)
    u_b = sector_unitary(block.n, setting_b)
    return PairBlockState(block.n, u_a @ block.amplitudes @ u_b.T, block.weight)


def joint_photon_distribution(
    source: PdcSource, setting_a: AnalyzerSetting, setting_b: AnalyzerSetting
) -> JointPhotonDistribution:
    blocks = []
    for block in build_pdc_state(source):
        rotated = apply_analyzer(block, setting_a, setting_b)
        blocks.append(block.weight * np.abs(rotated.amplitudes) ** 2)
    deficit = tail_weight(source.tanh_chi, source.max_pairs)
    return JointPhotonDistribution(tuple(blocks), deficit)
