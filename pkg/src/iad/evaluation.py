"""Per-example uncertainty reports, boxplot-style summaries, OOD evaluation
and FGSM attack sweeps."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass

import numpy as np

from . import network
from .data import Dataset
from .dirichlet import DirichletParams, mutual_information, predictive_entropy
from .losses import LossConfig

__all__ = [
    "UncertaintyReport",
    "DistributionSummary",
    "SweepRow",
    "evaluate",
    "summarize",
    "fgsm_attack",
    "ood_evaluate",
    "epsilon_sweep",
    "reports_to_csv",
    "summary_to_json",
    "sweep_to_csv",
]


@dataclass(frozen=True)
class UncertaintyReport:
    pred_class: int
    correct: bool | None     # None for unlabeled (OOD) data
    entropy: float
    mutual_info: float
    max_prob: float
    alpha0: float


@dataclass(frozen=True)
class DistributionSummary:
    """Five-number summary with 1.5*IQR whiskers and a threshold-exceedance
    fraction (count of values >= threshold over n)."""

    count: int
    min: float
    q1: float
    median: float
    q3: float
    whisker_lo: float
    whisker_hi: float
    mean: float
    threshold: float
    fraction_above_threshold: float


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    accuracy: float
    mean_entropy: float
    mean_mutual_info: float


def _report_rows(alpha: np.ndarray, label_idx: np.ndarray | None) -> list[UncertaintyReport]:
    reports = []
    for i in range(alpha.shape[0]):
        d = DirichletParams(alpha[i])
        mean = d.alpha / d.alpha0
        pred = int(np.argmax(mean))  # argmax takes the lowest index on ties
        correct = None if label_idx is None else bool(pred == label_idx[i])
        reports.append(UncertaintyReport(
            pred_class=pred,
            correct=correct,
            entropy=predictive_entropy(d),
            mutual_info=mutual_information(d),
            max_prob=float(mean[pred]),
            alpha0=d.alpha0,
        ))
    return reports


def evaluate(net: network.NetworkParams, data: Dataset) -> list[UncertaintyReport]:
    """One report per example; prediction is the argmax of the predictive mean."""
    trace = network.forward(net, data.features)
    labels = None if data.labels is None else data.label_indices
    return _report_rows(trace.alpha, labels)


def summarize(values, threshold: float) -> DistributionSummary:
    """Quartiles by linear interpolation; whiskers are the extreme data points
    within 1.5*IQR of the quartile box."""
    v = np.asarray(list(values), dtype=np.float64)
    if v.size == 0:
        raise ValueError("cannot summarize an empty list")
    q1, med, q3 = np.percentile(v, [25.0, 50.0, 75.0])
    iqr = q3 - q1
    in_lo = v[v >= q1 - 1.5 * iqr]
    in_hi = v[v <= q3 + 1.5 * iqr]
    return DistributionSummary(
        count=int(v.size),
        min=float(v.min()),
        q1=float(q1),
        median=float(med),
        q3=float(q3),
        whisker_lo=float(in_lo.min()),
        whisker_hi=float(in_hi.max()),
        mean=float(v.mean()),
        threshold=float(threshold),
        fraction_above_threshold=float(np.count_nonzero(v >= threshold) / v.size),
    )


def fgsm_attack(net: network.NetworkParams, x: np.ndarray, correct_class,
                epsilon: float, cfg: LossConfig,
                bounds: tuple[float, float] | None) -> np.ndarray:
    """x + epsilon * sgn(grad_x F), clipped componentwise to bounds.
    sgn(0) = 0, so zero-gradient components stay put. Works on a single
    feature vector or a batch."""
    if epsilon < 0.0:
        raise ValueError("epsilon must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    g = network.input_gradient(net, x, correct_class, cfg)
    adv = x + epsilon * np.sign(g)
    if bounds is not None:
        adv = np.clip(adv, bounds[0], bounds[1])
    return adv


def ood_evaluate(net: network.NetworkParams, ood_data: Dataset,
                 threshold_fraction: float) -> tuple[DistributionSummary, DistributionSummary]:
    """Entropy and mutual-information summaries over an unlabeled OOD set;
    the exceedance threshold is threshold_fraction * ln K."""
    if not 0.0 < threshold_fraction <= 1.0:
        raise ValueError("threshold_fraction must be in (0, 1]")
    if ood_data.n == 0:
        raise ValueError("empty dataset")
    reports = evaluate(net, ood_data)
    threshold = threshold_fraction * np.log(net.output_dim)
    entropy = summarize([r.entropy for r in reports], threshold)
    mi = summarize([r.mutual_info for r in reports], threshold)
    return entropy, mi


def epsilon_sweep(net: network.NetworkParams, data: Dataset, epsilons,
                  cfg: LossConfig, bounds: tuple[float, float] | None = None) -> list[SweepRow]:
    """Accuracy / mean entropy / mean MI per noise level; the eps=0 row equals
    clean evaluation."""
    epsilons = [float(e) for e in epsilons]
    if any(b > a for a, b in zip(epsilons[1:], epsilons)):
        raise ValueError("epsilons must be sorted ascending")
    if data.labels is None:
        raise ValueError("attack sweep needs labeled data")
    if bounds is None:
        bounds = data.feature_range
    labels = data.label_indices
    rows = []
    for eps in epsilons:
        x = data.features if eps == 0.0 else fgsm_attack(
            net, data.features, labels, eps, cfg, bounds)
        reports = _report_rows(network.forward(net, x).alpha, labels)
        rows.append(SweepRow(
            epsilon=eps,
            accuracy=float(np.mean([r.correct for r in reports])),
            mean_entropy=float(np.mean([r.entropy for r in reports])),
            mean_mutual_info=float(np.mean([r.mutual_info for r in reports])),
        ))
    return rows


# ---------------------------------------------------------------------------
# artifact emission


def reports_to_csv(reports: list[UncertaintyReport], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["pred_class", "correct", "entropy", "mutual_info",
                         "max_prob", "alpha0"])
        for r in reports:
            writer.writerow([
                r.pred_class,
                "" if r.correct is None else int(r.correct),
                repr(r.entropy), repr(r.mutual_info), repr(r.max_prob), repr(r.alpha0),
            ])


def summary_to_json(summary: DistributionSummary, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(asdict(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")


def sweep_to_csv(rows: list[SweepRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epsilon", "accuracy", "mean_entropy", "mean_mutual_info"])
        for r in rows:
            writer.writerow([repr(r.epsilon), repr(r.accuracy),
                             repr(r.mean_entropy), repr(r.mean_mutual_info)])
