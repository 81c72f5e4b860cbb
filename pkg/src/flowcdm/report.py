"""Summary analytics over measurement output files.

Single pass, exact counting: per-concept row counts and distinct patient
coverage. Desk-scale cardinalities do not justify probabilistic sketches.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterator

from .ingest import CSV_KWARGS
from .model import MappingTable
from .transform import MEAS_FIELDS


def _measurement_rows(path: str | Path) -> Iterator[list[str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, **CSV_KWARGS)
        header = next(reader, None)
        if header != list(MEAS_FIELDS):
            raise ValueError(f"{path}: not a measurement output file")
        for row in reader:
            if len(row) != len(MEAS_FIELDS):
                raise ValueError(f"{path}: malformed row {row!r}")
            yield row


def per_concept_summary(
    path: str | Path, mapping: MappingTable
) -> list[tuple[str, str, int]]:
    """(concept_code, concept_name, count) per concept, by name ascending."""
    by_concept: dict[int, int] = {}
    for row in _measurement_rows(path):
        concept_id = int(row[1])
        by_concept[concept_id] = by_concept.get(concept_id, 0) + 1

    labels: dict[int, tuple[str, str]] = {
        rule.concept_id: (rule.concept_code, rule.concept_name)
        for rule in mapping.rules
    }
    summary = [
        (*labels.get(concept_id, ("", f"(unknown concept {concept_id})")), count)
        for concept_id, count in by_concept.items()
    ]
    summary.sort(key=lambda row: row[1])
    return summary


def patient_coverage(path: str | Path) -> int:
    """Exact distinct count of person_id values in a measurement output."""
    patients = set()
    for row in _measurement_rows(path):
        patients.add(row[0])
    return len(patients)


def render_concept_summary(summary: list[tuple[str, str, int]]) -> str:
    """Aligned-column rendering for standard output."""
    if not summary:
        return "(no measurements)"
    name_width = max(len(name) for _, name, _ in summary)
    code_width = max(len(code) for code, _, _ in summary)
    lines = [
        f"{code:<{code_width}}  {name:<{name_width}}  {count:>12}"
        for code, name, count in summary
    ]
    total = sum(count for _, _, count in summary)
    lines.append(f"{'':<{code_width}}  {'total':<{name_width}}  {total:>12}")
    return "\n".join(lines)


def write_concept_summary(
    summary: list[tuple[str, str, int]], path: str | Path
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, **CSV_KWARGS)
        writer.writerow(("concept_code", "concept_name", "count"))
        for code, name, count in summary:
            writer.writerow((code, name, str(count)))
