"""Closed-form versus Fock-pipeline comparison on the standard parameter grid."""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from . import closed_form
from .chsh import PipelineCorrelator
from .detectors import CHANNEL_PAIRS, DetectorParams, PostprocessingModel
from .fock import PdcSource

STANDARD_TANH_CHI = tuple(round(0.05 * k, 2) for k in range(1, 15))
STANDARD_ETA = (0.4, 0.6, 0.9, 1.0)
STANDARD_NOISE = (0.0, 1e-6, 1e-3)
STANDARD_DELTA = tuple(k * math.pi / 16 for k in range(9))

ONOFF_TOLERANCE = 1e-8
ABSOLUTE_FLOOR = 1e-14
# The default 1e-12 tail bound is too loose for probabilities near 1e-7
# checked at 1e-8 relative accuracy.
ORACLE_TAIL_TOLERANCE = 1e-18
SQUASH_TANH_CHI = (1e-3, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7)
SINGLET_LIMIT_TANH_CHI = 1e-3
SINGLET_LIMIT_TOLERANCE = 1e-4

_INDEX = {"T": 0, "R": 1}


def relative_deviation(value: float, reference: float) -> float:
    """``|value - reference|`` relative to ``reference``, floored so that
    absolute differences below ``ABSOLUTE_FLOOR`` count as agreement."""
    return abs(value - reference) / max(abs(reference), ABSOLUTE_FLOOR / ONOFF_TOLERANCE)


@dataclass
class ValidationReport:
    rows: list = field(default_factory=list)
    onoff_max_deviation: float = 0.0
    printed_onoff_max_deviation: float = 0.0
    squash_max_deviation: float = 0.0
    singlet_limit_deviation: float = 0.0

    @property
    def onoff_agrees(self) -> bool:
        return self.onoff_max_deviation < ONOFF_TOLERANCE

    @property
    def singlet_limit_holds(self) -> bool:
        return self.singlet_limit_deviation <= SINGLET_LIMIT_TOLERANCE

    def summary(self) -> str:
        lines = [
            "closed form                     max rel. deviation   gate",
            f"on-off probability (corrected)  {self.onoff_max_deviation:.3e}          "
            f"{'PASS' if self.onoff_agrees else 'FAIL'} (< {ONOFF_TOLERANCE:g})",
            f"on-off probability (as printed) {self.printed_onoff_max_deviation:.3e}          "
            "info only",
            f"squash correlation (as printed) {self.squash_max_deviation:.3e}          "
            "info only",
            "photon-number-resolving form    unavailable          coefficients undefined",
            "",
            "squash correlation, printed closed form vs pipeline (eta=1, n_nc=0):",
            "  tanh_chi   delta      closed          pipeline        abs. dev.",
        ]
        for row in self.rows:
            if row["form"] != "squash-correlation":
                continue
            flag = "  <- small tanh_chi divergence" if row["tanh_chi"] <= 0.05 else ""
            lines.append(
                f"  {row['tanh_chi']:<9.3g}  {row['delta']:<9.4f}  {row['closed']:<+14.8f}  "
                f"{row['oracle']:<+14.8f}  {abs(row['closed'] - row['oracle']):.3e}{flag}"
            )
        lines += [
            "",
            f"pipeline singlet limit at tanh_chi={SINGLET_LIMIT_TANH_CHI:g}: "
            f"max |E + cos 2 delta| = {self.singlet_limit_deviation:.3e} "
            f"({'ok' if self.singlet_limit_holds else 'VIOLATED'}, tolerance {SINGLET_LIMIT_TOLERANCE:g})",
        ]
        return "\n".join(lines)


def run_validation(
    tanh_chis=STANDARD_TANH_CHI,
    etas=STANDARD_ETA,
    noises=STANDARD_NOISE,
    deltas=STANDARD_DELTA,
) -> ValidationReport:
    if not (len(tanh_chis) and len(etas) and len(noises) and len(deltas)):
        raise ValueError("validation grid is empty")
    report = ValidationReport()
    deltas = np.asarray(deltas, dtype=float)

    for t in tanh_chis:
        source = PdcSource(t, tail_tolerance=ORACLE_TAIL_TOLERANCE)
        for eta in etas:
            for nc in noises:
                correlator = PipelineCorrelator(
                    source, DetectorParams(eta, nc), PostprocessingModel.NAIVE_ON_OFF
                )
                acc = correlator.coincidences_by_difference(deltas)
                for k, delta in enumerate(deltas):
                    for pair in CHANNEL_PAIRS:
                        oracle = float(acc[k, _INDEX[pair[0]], _INDEX[pair[1]]])
                        fixed = closed_form.onoff_probability(t, eta, nc, delta, 0.0, pair)
                        printed = closed_form.onoff_probability_printed(t, eta, nc, delta, 0.0, pair)
                        dev = relative_deviation(fixed, oracle)
                        dev_printed = relative_deviation(printed, oracle)
                        report.onoff_max_deviation = max(report.onoff_max_deviation, dev)
                        report.printed_onoff_max_deviation = max(
                            report.printed_onoff_max_deviation, dev_printed
                        )
                        base = dict(tanh_chi=t, eta=eta, n_nc=nc, delta=float(delta), pair="".join(pair))
                        report.rows.append(
                            dict(base, form="onoff-corrected", closed=fixed, oracle=oracle, deviation=dev)
                        )
                        report.rows.append(
                            dict(base, form="onoff-printed", closed=printed, oracle=oracle, deviation=dev_printed)
                        )

    lossless = DetectorParams(1.0, 0.0)
    for t in SQUASH_TANH_CHI:
        correlator = PipelineCorrelator(PdcSource(t), lossless, PostprocessingModel.SQUASH_ON_OFF)
        e_oracle = correlator.correlations_by_difference(deltas)
        for delta, oracle in zip(deltas, e_oracle):
            closed = closed_form.squash_correlation_closed_form(t, float(delta), 0.0)
            dev = abs(closed - oracle)
            report.squash_max_deviation = max(report.squash_max_deviation, dev)
            report.rows.append(
                dict(
                    form="squash-correlation", tanh_chi=t, eta=1.0, n_nc=0.0, delta=float(delta),
                    pair="", closed=closed, oracle=float(oracle), deviation=dev,
                )
            )
        if t == SINGLET_LIMIT_TANH_CHI:
            report.singlet_limit_deviation = float(np.max(np.abs(e_oracle + np.cos(2 * deltas))))
    return report
