"""Chapter evaluation: precision/recall/F1 at start-time and IoU thresholds.

Time criteria count a predicted chapter as a hit when its start lies within
K in {1, 3, 5} seconds of a matched ground-truth start (start-only, not ends);
IoU criteria use interval IoU at t in {0.5, 0.7, 0.9}. Matching is greedy
one-to-one in descending score, recomputed per criterion, which makes every
metric anti-monotone in threshold strictness. The shared start at 0 counts as
a trivially matched boundary, so P@Ks is comparable across tools.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .timeline import ChapterList, interval_iou

TIME_THRESHOLDS = (1.0, 3.0, 5.0)
IOU_THRESHOLDS = (0.5, 0.7, 0.9)
DURATION_TOLERANCE = 0.5

# Display order used by the aligned text table.
TABLE_COLUMNS = ("F1@5s", "F1@3s", "F1@1s", "P@1s", "R@1s", "F1@0.5", "F1@0.7", "F1@0.9", "P@0.9", "R@0.9")


@dataclass
class MetricReport:
    n_pred: int
    n_gt: int
    time_hits: dict[float, int] = field(default_factory=dict)
    iou_hits: dict[float, int] = field(default_factory=dict)

    def _prf(self, hits: int) -> tuple[float, float, float]:
        p = hits / self.n_pred if self.n_pred else 0.0
        r = hits / self.n_gt if self.n_gt else 0.0
        f1 = 2.0 * p * r / (p + r) if (p + r) > 0 else 0.0
        return p, r, f1

    def time_precision(self, k: float) -> float:
        return self._prf(self.time_hits[k])[0]

    def time_recall(self, k: float) -> float:
        return self._prf(self.time_hits[k])[1]

    def time_f1(self, k: float) -> float:
        return self._prf(self.time_hits[k])[2]

    def iou_precision(self, t: float) -> float:
        return self._prf(self.iou_hits[t])[0]

    def iou_recall(self, t: float) -> float:
        return self._prf(self.iou_hits[t])[1]

    def iou_f1(self, t: float) -> float:
        return self._prf(self.iou_hits[t])[2]

    def to_dict(self) -> dict:
        out = {"n_pred": self.n_pred, "n_gt": self.n_gt, "time": {}, "iou": {}}
        for k in sorted(self.time_hits):
            p, r, f1 = self._prf(self.time_hits[k])
            out["time"][f"{k:g}s"] = {"precision": p, "recall": r, "f1": f1, "hits": self.time_hits[k]}
        for t in sorted(self.iou_hits):
            p, r, f1 = self._prf(self.iou_hits[t])
            out["iou"][f"{t:g}"] = {"precision": p, "recall": r, "f1": f1, "hits": self.iou_hits[t]}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def match_one_to_one(pred: ChapterList, gt: ChapterList, score, min_score: float) -> list[tuple[int, int]]:
    """Greedy descending-score one-to-one matching as (gt index, pred index) pairs.

    Pairs scoring below min_score are excluded; score ties break by
    (gt index, pred index), so the matching is deterministic.
    """
    scored = []
    for gi, g in enumerate(gt.chapters):
        for pi, p in enumerate(pred.chapters):
            s = score(p, g)
            if s >= min_score:
                scored.append((-s, gi, pi))
    scored.sort()
    gt_used, pred_used = set(), set()
    matching = []
    for _, gi, pi in scored:
        if gi in gt_used or pi in pred_used:
            continue
        gt_used.add(gi)
        pred_used.add(pi)
        matching.append((gi, pi))
    return matching


def evaluate(pred: ChapterList, gt: ChapterList) -> MetricReport:
    """Score one video's predicted chapters against its annotation."""
    if abs(pred.video_duration - gt.video_duration) > DURATION_TOLERANCE:
        raise ValueError(
            f"duration mismatch: prediction covers {pred.video_duration}, annotation {gt.video_duration}"
        )
    report = MetricReport(n_pred=len(pred), n_gt=len(gt))
    for k in TIME_THRESHOLDS:
        matching = match_one_to_one(pred, gt, lambda p, g: -abs(p.interval.start - g.interval.start), -k)
        report.time_hits[k] = len(matching)
    for t in IOU_THRESHOLDS:
        matching = match_one_to_one(pred, gt, lambda p, g: interval_iou(p.interval, g.interval), t)
        report.iou_hits[t] = len(matching)
    return report


def aggregate(reports: list[MetricReport]) -> MetricReport:
    """Micro-average: pool hits and counts across videos, then compute P/R/F1."""
    if not reports:
        raise ValueError("nothing to aggregate")
    total = MetricReport(
        n_pred=sum(r.n_pred for r in reports),
        n_gt=sum(r.n_gt for r in reports),
        time_hits={k: sum(r.time_hits[k] for r in reports) for k in TIME_THRESHOLDS},
        iou_hits={t: sum(r.iou_hits[t] for r in reports) for t in IOU_THRESHOLDS},
    )
    return total


def _row_values(report: MetricReport) -> list[float]:
    return [
        report.time_f1(5.0), report.time_f1(3.0), report.time_f1(1.0),
        report.time_precision(1.0), report.time_recall(1.0),
        report.iou_f1(0.5), report.iou_f1(0.7), report.iou_f1(0.9),
        report.iou_precision(0.9), report.iou_recall(0.9),
    ]


def format_table(rows: dict[str, MetricReport]) -> str:
    """Aligned text table, one row per labeled report, values as percentages."""
    label_width = max(len("Run"), *(len(label) for label in rows))
    header = "Run".ljust(label_width) + "".join(c.rjust(9) for c in TABLE_COLUMNS)
    lines = [header]
    for label, report in rows.items():
        cells = "".join(f"{100.0 * v:9.2f}" for v in _row_values(report))
        lines.append(label.ljust(label_width) + cells)
    return "\n".join(lines)
