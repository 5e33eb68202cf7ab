"""Comparison tables: computed scores against published reference rows.

The report renders the DBpedia / LinkedMDB / ALL x k in {5, 10} grid for
F-measure and MAP.  ALL cells are entity-weighted means over both corpus
halves.  Significance against the reference system is a paired t-test on
per-entity scores when that system's per-entity scores are supplied;
otherwise a one-sample t-test against its published mean, flagged
``constants-only``.  Relative-improvement columns (min/max/avg, percent)
compare the primary computed system against every reference row.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from kgsum.errors import ContractError
from kgsum.stats import paired_t_test, t_two_sided_p

__all__ = [
    "SystemScores",
    "MetricsReport",
    "load_reference_scores",
    "build_report",
    "SIGNIFICANCE_LEVEL",
]

SIGNIFICANCE_LEVEL = 0.05
HALVES = ("dbpedia", "lmdb")
METRICS = ("f_measure", "map")
_METRIC_LABEL = {"f_measure": "F-measure", "map": "MAP"}


def load_reference_scores() -> dict:
    """The packaged published-results table (versioned data file)."""
    blob = resources.files("kgsum.data").joinpath("reference_scores.json").read_text("utf-8")
    return json.loads(blob)


@dataclass
class SystemScores:
    """Per-entity scores of one evaluated system.

    ``scores[metric][k][entity_id]`` holds the per-entity value (already
    averaged over the five users); ``source`` maps entities to their
    corpus half (``dbpedia`` or ``lmdb``).
    """

    name: str
    scores: dict[str, dict[int, dict[str, float]]]
    source: dict[str, str]

    def entity_vector(self, metric: str, k: int, half: str | None = None) -> tuple[list[str], np.ndarray]:
        per_entity = self.scores[metric][k]
        ids = sorted(
            eid for eid in per_entity if half is None or self.source[eid] == half
        )
        return ids, np.array([per_entity[eid] for eid in ids])

    def cell(self, metric: str, k: int, half: str | None = None) -> float:
        _, vec = self.entity_vector(metric, k, half)
        if vec.size == 0:
            raise ContractError(f"no scores for {metric}@{k} ({half or 'all'})")
        return float(vec.mean())


def _one_sample_p(values: np.ndarray, constant: float) -> float:
    d = values - constant
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        return 1.0 if float(d.mean()) == 0.0 else 0.0
    t = float(d.mean()) / (sd / np.sqrt(len(d)))
    return t_two_sided_p(t, len(d) - 1)


@dataclass
class MetricsReport:
    """All computed cells, significance markers and reference rows."""

    computed: dict[str, dict]            # system -> {metric: {half/all: {k: value}}}
    significance: dict[str, dict]        # system -> {metric: {half/all: {k: marker}}}
    improvements: dict[str, dict]        # reference row -> {metric: {min,max,avg}}
    reference: dict
    comparison_mode: str                 # "per-entity" | "constants-only"
    reference_system: str
    entity_counts: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "computed": self.computed,
            "significance": self.significance,
            "improvements": self.improvements,
            "comparison_mode": self.comparison_mode,
            "reference_system": self.reference_system,
            "entity_counts": self.entity_counts,
            "significance_level": SIGNIFICANCE_LEVEL,
        }

    def render(self) -> str:
        lines = []
        for metric in METRICS:
            lines.append(f"{_METRIC_LABEL[metric]} (top-5 / top-10)")
            header = (
                f"{'Model':<22}"
                f"{'DBp@5':>8}{'DBp@10':>8}{'MDB@5':>8}{'MDB@10':>8}{'ALL@5':>8}{'ALL@10':>8}"
                f"{'min%':>7}{'max%':>7}{'avg%':>7}"
            )
            lines.append(header)
            lines.append("-" * len(header))
            for name, row in self.reference[metric].items():
                if row is None:
                    lines.append(f"{name:<22}" + f"{'-':>8}" * 6)
                    continue
                cells = [row[h][str(k)] for h in ("dbpedia", "lmdb", "all") for k in (5, 10)]
                cells = [cells[0], cells[1], cells[2], cells[3], cells[4], cells[5]]
                text = f"{name:<22}" + "".join(f"{c:>8.3f}" for c in cells)
                imp = self.improvements.get(name, {}).get(metric)
                if imp is not None:
                    text += f"{imp['min']:>7.0f}{imp['max']:>7.0f}{imp['avg']:>7.0f}"
                lines.append(text)
            for name, metrics_ in self.computed.items():
                row = metrics_[metric]
                marks = self.significance.get(name, {}).get(metric, {})
                cells = []
                for half in ("dbpedia", "lmdb", "all"):
                    for k in (5, 10):
                        value = row[half][str(k)]
                        mark = marks.get(half, {}).get(str(k), "")
                        cells.append(f"{value:.3f}{mark}")
                label = (name + " *")[:22]
                lines.append(f"{label:<22}" + "".join(f"{c:>8}" for c in cells))
            lines.append("")
        lines.append(
            f"* computed by this run; (+/-) marks significant improvement/degradation vs "
            f"{self.reference_system} at p <= {SIGNIFICANCE_LEVEL} ({self.comparison_mode})."
        )
        return "\n".join(lines)


def build_report(
    systems: list[SystemScores],
    reference: dict | None = None,
    reference_per_entity: SystemScores | None = None,
) -> MetricsReport:
    """Assemble the comparison report for one or more computed systems.

    The first system is the primary one used for the improvement columns.
    """
    if not systems:
        raise ContractError("need at least one computed system")
    reference = reference or load_reference_scores()
    ref_name = reference["reference_system"]
    metric_key = {"f_measure": "f_measure", "map": "map"}

    computed: dict[str, dict] = {}
    significance: dict[str, dict] = {}
    counts = {
        "dbpedia": sum(1 for s in systems[0].source.values() if s == "dbpedia"),
        "lmdb": sum(1 for s in systems[0].source.values() if s == "lmdb"),
    }

    comparison_mode = "per-entity" if reference_per_entity is not None else "constants-only"

    for system in systems:
        computed[system.name] = {}
        significance[system.name] = {}
        for metric in METRICS:
            table: dict[str, dict[str, float]] = {}
            marks: dict[str, dict[str, str]] = {}
            for half in ("dbpedia", "lmdb", "all"):
                table[half] = {}
                marks[half] = {}
                for k in (5, 10):
                    sel_half = None if half == "all" else half
                    value = system.cell(metric, k, sel_half)
                    table[half][str(k)] = value
                    ids, vec = system.entity_vector(metric, k, sel_half)
                    if reference_per_entity is not None:
                        ref_ids, _ = reference_per_entity.entity_vector(metric, k, sel_half)
                        if ref_ids != ids:
                            raise ContractError(
                                "reference per-entity scores are not paired with the "
                                f"evaluated entities for {metric}@{k}"
                            )
                        _, ref_vec = reference_per_entity.entity_vector(metric, k, sel_half)
                        p = paired_t_test(vec, ref_vec)
                        ref_mean = float(ref_vec.mean())
                    else:
                        ref_row = reference[metric_key[metric]].get(ref_name)
                        if ref_row is None:  # reference system has no published row
                            marks[half][str(k)] = ""
                            continue
                        ref_mean = ref_row[half][str(k)]
                        p = _one_sample_p(vec, ref_mean)
                    if p <= SIGNIFICANCE_LEVEL:
                        marks[half][str(k)] = "+" if value > ref_mean else "-"
                    else:
                        marks[half][str(k)] = ""
            computed[system.name][metric] = table
            significance[system.name][metric] = marks

    primary = systems[0]
    improvements: dict[str, dict] = {}
    for metric in METRICS:
        for name, row in reference[metric_key[metric]].items():
            if row is None:
                continue
            ours = computed[primary.name][metric]
            rel = [
                100.0 * (ours[half][str(k)] - row[half][str(k)]) / row[half][str(k)]
                for half in ("dbpedia", "lmdb", "all")
                for k in (5, 10)
            ]
            improvements.setdefault(name, {})[metric] = {
                "min": round(min(rel), 1),
                "max": round(max(rel), 1),
                "avg": round(float(np.mean(rel)), 1),
            }

    return MetricsReport(
        computed=computed,
        significance=significance,
        improvements=improvements,
        reference={m: reference[metric_key[m]] for m in METRICS},
        comparison_mode=comparison_mode,
        reference_system=ref_name,
        entity_counts=counts,
    )
