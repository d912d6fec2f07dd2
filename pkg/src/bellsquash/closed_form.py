"""Analytic click probabilities and correlations for the down-conversion source.

These serve as a fast path and as an independent check on the Fock-space
pipeline. They depend on the analyzer angles only through their difference.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

DENOMINATOR_FLOOR = 1e-300


class DegenerateDenominatorError(ArithmeticError):
    pass


@dataclass(frozen=True)
class OnOffCoefficients:
    c0: float
    c1: float
    c_same: float
    c_different: float

    def pair(self, i_a: str, i_b: str) -> float:
        return self.c_same if i_a == i_b else self.c_different


def onoff_coefficients(tanh_chi: float, eta: float, delta: float) -> OnOffCoefficients:
    t2 = tanh_chi * tanh_chi
    core = eta**2 * t2 - (1.0 + (eta - 1.0) * t2) ** 2
    c0 = core**2
    c1 = eta * (1.0 - eta) * (1.0 - t2) * t2 * core
    pref = eta**2 * t2 * (1.0 - t2) ** 2
    leak = (1.0 - eta) ** 2 * t2
    c_same = pref * (leak - math.sin(delta) ** 2)
    c_different = pref * (leak - math.cos(delta) ** 2)
    return OnOffCoefficients(c0, c1, c_same, c_different)


def _check_denominators(*dens: float) -> None:
    for d in dens:
        if abs(d) < DENOMINATOR_FLOOR:
            raise DegenerateDenominatorError("vanishing denominator in on-off closed form")


def onoff_probability(
    tanh_chi: float,
    eta: float,
    n_nc: float,
    theta_a: float,
    theta_b: float,
    pair: tuple[str, str],
) -> float:
    """Naive on-off coincidence probability for the channel ``pair``, e.g. ``("T", "R")``.

    Inclusion-exclusion over the silent channels: the three terms are the
    generating function of the state at loss factor ``1 - eta`` with two,
    three and four channels required silent, times ``exp(-n_nc)`` for every
    silent channel.
    """
    if not (0.0 <= tanh_chi < 1.0):
        raise ValueError(f"tanh_chi must lie in [0, 1), got {tanh_chi!r}")
    t2 = tanh_chi * tanh_chi
    c = onoff_coefficients(tanh_chi, eta, theta_a - theta_b)
    d_two = c.c0 + 2.0 * c.c1 + c.pair(*pair)
    d_three = c.c0 + c.c1
    _check_denominators(c.c0, d_three, d_two)
    q = math.exp(-n_nc)
    return (1.0 - t2) ** 4 * q**2 * (1.0 / d_two - 2.0 * q / d_three + q**2 / c.c0)


def onoff_probability_printed(
    tanh_chi: float,
    eta: float,
    n_nc: float,
    theta_a: float,
    theta_b: float,
    pair: tuple[str, str],
) -> float:
    """Literal transcription of the published on-off expression.

    It carries an extra ``eta**4`` factor and misplaced noise exponents
    relative to :func:`onoff_probability`; it agrees only at ``eta = 1``
    and ``n_nc = 0``. Kept for the validation report.
    """
    if not (0.0 <= tanh_chi < 1.0):
        raise ValueError(f"tanh_chi must lie in [0, 1), got {tanh_chi!r}")
    t2 = tanh_chi * tanh_chi
    c = onoff_coefficients(tanh_chi, eta, theta_a - theta_b)
    d_two = c.c0 + 2.0 * c.c1 + c.pair(*pair)
    d_three = c.c0 + c.c1
    _check_denominators(c.c0, d_three, d_two)
    pref = eta**4 * (1.0 - t2) ** 4 * math.exp(-4.0 * n_nc)
    return pref * (1.0 / d_two - 2.0 * math.exp(-n_nc) / d_three + 1.0 / c.c0)


def onoff_correlation_lossless(tanh_chi: float, delta: float) -> float:
    """Naive on-off correlation at unit efficiency without noise counts."""
    t2 = tanh_chi * tanh_chi
    return -math.cos(2 * delta) / (1.0 - 0.5 * t2 * math.sin(2 * delta) ** 2)


def squash_denominator(tanh_chi: float, delta: float) -> float:
    """Printed denominator of the lossless squash-model correlation.

    Grouped as ``1 - t2/2 s2 + A * B + C`` with ``s2 = sin^2(2 delta)``,
    ``A = (9 + 3(1-t2)) / (2 t2 (1-t2)^2)``, ``B = 1 - t2 + t2^2 s2 / 4`` and
    ``C = [1 - 2(1-t2)^2](2 - t2) / (t2 (1-t2)^2)``.
    """
    if not (0.0 < tanh_chi < 1.0):
        raise ValueError("squash closed form needs 0 < tanh_chi < 1")
    t2 = tanh_chi * tanh_chi
    s2 = math.sin(2 * delta) ** 2
    u = 1.0 - t2
    a = (9.0 + 3.0 * u) / (2.0 * t2 * u**2)
    b = 1.0 - t2 + 0.25 * t2**2 * s2
    c = (1.0 - 2.0 * u**2) * (2.0 - t2) / (t2 * u**2)
    return 1.0 - 0.5 * t2 * s2 + a * b + c


def squash_correlation_closed_form(tanh_chi: float, theta_a: float, theta_b: float) -> float:
    delta = theta_a - theta_b
    return -math.cos(2 * delta) / squash_denominator(tanh_chi, delta)
