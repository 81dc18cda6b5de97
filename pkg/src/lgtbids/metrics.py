"""Detection scoring: confusion counts, the ten-rate metric suite, and
Monte Carlo aggregation.

Aggregation micro-averages: confusion counts are summed per attack kind
and overall before any rate is computed, which keeps trials with
undefined per-trial rates from poisoning the average. A rate whose
denominator is zero is reported as None, never coerced to 0.

Naming note: ``detection_rate`` is tp/(tp+fp), i.e. what is usually
called precision; both names are emitted in reports.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .attack import AttackSpec, GroundTruth
from .detector import DetectionFlag, DetectionReport


class MetricsError(Exception):
    """Base class for scoring failures."""


class FlagTruthMismatchError(MetricsError):
    pass


class LengthMismatchError(MetricsError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp,
            self.fp + other.fp,
            self.tn + other.tn,
            self.fn + other.fn,
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricSuite:
    """The ten evaluation rates; None marks an undefined (0/0) rate."""

    accuracy: Optional[float]
    detection_rate: Optional[float]
    far: Optional[float]
    for_: Optional[float]
    fnr: Optional[float]
    specificity: Optional[float]
    sensitivity: Optional[float]
    balanced_accuracy: Optional[float]
    f1: Optional[float]
    error_rate: Optional[float]


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


def metric_suite(c: ConfusionCounts) -> MetricSuite:
    """Compute every rate from one confusion matrix."""
    sensitivity = _ratio(c.tp, c.tp + c.fn)
    specificity = _ratio(c.tn, c.fp + c.tn)
    balanced = (
        (sensitivity + specificity) / 2.0
        if sensitivity is not None and specificity is not None
        else None
    )
    return MetricSuite(
        accuracy=_ratio(c.tp + c.tn, c.total),
        detection_rate=_ratio(c.tp, c.tp + c.fp),
        far=_ratio(c.fp, c.fp + c.tn),
        for_=_ratio(c.fn, c.fn + c.tn),
        fnr=_ratio(c.fn, c.tp + c.fn),
        specificity=specificity,
        sensitivity=sensitivity,
        balanced_accuracy=balanced,
        f1=_ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn),
        error_rate=_ratio(c.fp + c.fn, c.total),
    )


def score(
    flags: Sequence[DetectionFlag],
    truth: GroundTruth,
    scored_nodes: Sequence[str],
) -> ConfusionCounts:
    """Tally flags against ground truth over exactly ``scored_nodes``.

    Nodes outside ``scored_nodes`` contribute nothing, which is how the
    screening blind spot stays measurable: screened-mode scoring covers
    only the screened picks, full-scan scoring covers every node.
    """
    by_node = {f.node: f for f in flags}
    if len(by_node) != len(flags):
        raise FlagTruthMismatchError("duplicate node in flags")
    extra = set(by_node) - set(scored_nodes)
    if extra:
        raise FlagTruthMismatchError(
            "flags for nodes outside the scored set: " + ", ".join(sorted(extra))
        )
    tp = fp = tn = fn = 0
    for nid in scored_nodes:
        if nid not in by_node:
            raise FlagTruthMismatchError(f"scored node {nid} has no flag")
        flagged = by_node[nid].flag == 1
        attacked = nid in truth.attacked
        if flagged and attacked:
            tp += 1
        elif flagged and not attacked:
            fp += 1
        elif not flagged and attacked:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


@dataclass(frozen=True)
class TrialSummary:
    per_attack: Mapping[str, MetricSuite]
    per_attack_counts: Mapping[str, ConfusionCounts]
    overall: MetricSuite
    overall_counts: ConfusionCounts
    mean_detection_seconds: float
    per_layer_ee: Mapping[int, float]
    per_layer_ops: Mapping[int, int]


def summarize(
    counts: Sequence[ConfusionCounts],
    specs: Sequence[Optional[AttackSpec]],
    reports: Sequence[DetectionReport],
) -> TrialSummary:
    """Micro-average per-trial confusion counts into one summary."""
    if not (len(counts) == len(specs) == len(reports)):
        raise LengthMismatchError(
            f"counts/specs/reports lengths differ: "
            f"{len(counts)}/{len(specs)}/{len(reports)}"
        )
    overall = ConfusionCounts(0, 0, 0, 0)
    by_kind: dict[str, ConfusionCounts] = {}
    for c, spec in zip(counts, specs):
        overall = overall + c
        if spec is not None:
            kind = spec.kind.value
            by_kind[kind] = by_kind.get(kind, ConfusionCounts(0, 0, 0, 0)) + c

    ee_sums: dict[int, float] = {}
    ee_trials: dict[int, int] = {}
    ops_totals: dict[int, int] = {}
    for report in reports:
        for layer, ee in report.per_layer_ee.items():
            ee_sums[layer] = ee_sums.get(layer, 0.0) + ee
            ee_trials[layer] = ee_trials.get(layer, 0) + 1
        for layer, ops in report.ops_per_layer.items():
            ops_totals[layer] = ops_totals.get(layer, 0) + ops
    mean_elapsed = (
        sum(r.elapsed_detection_seconds for r in reports) / len(reports)
        if reports
        else 0.0
    )
    return TrialSummary(
        per_attack={k: metric_suite(v) for k, v in sorted(by_kind.items())},
        per_attack_counts=dict(sorted(by_kind.items())),
        overall=metric_suite(overall),
        overall_counts=overall,
        mean_detection_seconds=mean_elapsed,
        per_layer_ee={k: ee_sums[k] / ee_trials[k] for k in sorted(ee_sums)},
        per_layer_ops=dict(sorted(ops_totals.items())),
    )


def aggregate(
    reports: Sequence[DetectionReport],
    truths: Sequence[GroundTruth],
    specs: Sequence[Optional[AttackSpec]],
) -> TrialSummary:
    """Score each trial over its screened nodes and micro-average."""
    if not (len(reports) == len(truths) == len(specs)):
        raise LengthMismatchError(
            f"reports/truths/specs lengths differ: "
            f"{len(reports)}/{len(truths)}/{len(specs)}"
        )
    counts = [
        score(r.flags, t, r.screening.nodes()) for r, t in zip(reports, truths)
    ]
    return summarize(counts, specs, reports)
