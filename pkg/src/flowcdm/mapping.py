"""Curated row-name to concept crosswalk: built-in default, file I/O, validation.

Lookup is strictly case-sensitive whole-string matching. In flowsheet
data the same letters in a different case routinely label a different
measure (a lower-case "temp" is not a body temperature), so nothing in
this module folds, trims, or fuzzy-matches row names.

The mapping file format is plain tab-delimited so clinicians and data
engineers can curate it by hand and diff revisions:

    concept_id  concept_code  vocabulary_id  concept_name  row_names  range_min  range_max  unit_rule

with row_names pipe-separated and range/unit columns optional (empty).
"""

from __future__ import annotations

import csv
from pathlib import Path

from .ingest import CSV_KWARGS
from .model import KNOWN_UNIT_RULES, MappingRule, MappingTable, MappingValidationError

MAPPING_FIELDS = (
    "concept_id",
    "concept_code",
    "vocabulary_id",
    "concept_name",
    "row_names",
    "range_min",
    "range_max",
    "unit_rule",
)

# Built-in crosswalk of 28 commonly charted measures to standard LOINC
# concepts. Row names are the exact strings as charted, including the
# synonyms each concept is commonly abbreviated to. Body temperature
# carries the celsius-or-fahrenheit inference rule because source
# templates record either scale, usually without a unit. The pain score
# carries the only advisory range (0-10 by definition of the scale);
# every other measure is passed through uncleaned.
#
# Note: concept 45876241 uses code "IO_OUT", which is not LOINC-shaped;
# it is carried verbatim from the source vocabulary.
_DEFAULT_RULES: tuple[tuple[int, str, str, tuple[str, ...], tuple[float, float] | None, str | None], ...] = (
    (3005424, "8277-6", "Body surface area", ("BSA",), None, None),
    (3020891, "8310-5", "Body temperature",
     ("Temp", "Temperature", "Temp (in Celsius)", "Tcore"), None, "temperature_c_or_f"),
    (3025315, "29463-7", "Body weight", ("Weight",), None, None),
    (21490675, "60985-9", "Central venous pressure (CVP)", ("CVP",), None, None),
    (3012888, "8462-4", "Diastolic blood pressure",
     ("Diastolic BP", "ARTD", "Arterial Diastolic BP"), None, None),
    (21490565, "60802-6", "Dynamic plateau pressure", ("Pplat",), None, None),
    (3032652, "35088-4", "Glasgow coma scale", ("Glasgow",), None, None),
    (3027018, "8867-4", "Heart rate", ("HR", "Heart Rate"), None, None),
    (3036277, "8302-2", "Height", ("Height",), None, None),
    (3005629, "3151-8", "Inhaled oxygen flow rate", ("O2",), None, None),
    (45876241, "IO_OUT", "Input/Output", ("Urine", "Urine Output"), None, None),
    (21490581, "60826-5", "Lung compliance", ("COMP",), None, None),
    (42527086, "60949-5", "Mean airway pressure", ("MnAwP",), None, None),
    (3027598, "8478-0", "Mean blood pressure",
     ("ARTM", "Mean Arterial Pressure"), None, None),
    (21490566, "60804-2", "Minimum alveolar concentration (MAC) for anesthesia",
     ("etMAC",), None, None),
    (3045410, "33425-0", "Minute volume setting Ventilator", ("MV",), None, None),
    (21490615, "60860-4", "Nitrous oxide [VFr/PPres] Gas delivery system",
     ("N2O",), None, None),
    (3024882, "19994-3", "Oxygen/Inspired gas setting [Volume Fraction] Ventilator",
     ("FiO2",), None, None),
    (21490855, "76248-4", "PEEP Respiratory system --on ventilator",
     ("PEEP",), None, None),
    (3036453, "38214-3", "Pain severity [Score] Visual analog score",
     ("Pain Level - 1st Site",), (0.0, 10.0), None),
    (3011557, "19931-5", "Peak inspiratory gas flow setting Ventilator",
     ("PIP",), None, None),
    (3025809, "8634-8", "Q-T interval", ("QT Interval",), None, None),
    (3026258, "8636-3", "Q-T interval corrected", ("QTc Interval",), None, None),
    (3024171, "9279-1", "Respiratory rate", ("Resp", "Resp rate"), None, None),
    (21490553, "60782-0",
     "Sevoflurane gas delivered during case [Volume] from Gas delivery system",
     ("Sevoflurane",), None, None),
    (3004249, "8480-6", "Systolic blood pressure",
     ("Systolic BP", "ARTS", "Arterial Systolic BP"), None, None),
    (3012410, "20112-9", "Tidal volume setting Ventilator", ("TV",), None, None),
    (3025853, "20140-0", "Volume expired", ("VO2",), None, None),
)


def default_mapping() -> MappingTable:
    """The built-in curated table."""
    rules = tuple(
        MappingRule(
            concept_id=concept_id,
            concept_code=code,
            vocabulary_id="LOINC",
            concept_name=name,
            row_names=frozenset(row_names),
            advisory_range=advisory_range,
            unit_rule=unit_rule,
        )
        for concept_id, code, name, row_names, advisory_range, unit_rule in _DEFAULT_RULES
    )
    return MappingTable(rules)


def load_mapping(path: str | Path) -> MappingTable:
    """Parse and validate a mapping file.

    Every violation is collected and reported with the offending rule's
    identity; an empty file is a valid empty table.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh, **CSV_KWARGS))
    if not rows:
        return MappingTable(())
    if rows[0] != list(MAPPING_FIELDS):
        raise MappingValidationError([f"{path}: bad header {rows[0]!r}"])

    violations: list[str] = []
    parsed: list[MappingRule] = []
    seen_names: dict[str, str] = {}  # row_name -> identity of the owning line
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        ident = f"line {lineno}"
        if len(row) != len(MAPPING_FIELDS):
            violations.append(f"{ident}: expected {len(MAPPING_FIELDS)} columns")
            continue
        concept_raw, code, vocabulary, name, names_raw, lo_raw, hi_raw, unit_rule = (
            cell.strip() for cell in row
        )
        ident = f"line {lineno} (concept {concept_raw or '?'})"

        try:
            concept_id = int(concept_raw)
        except ValueError:
            violations.append(f"{ident}: concept_id is not an integer")
            continue
        if concept_id <= 0:
            violations.append(f"{ident}: concept_id must be positive")
            continue

        row_names = [part.strip() for part in names_raw.split("|") if part.strip()]
        if not row_names:
            violations.append(f"{ident}: empty row_names")
            continue
        local_dups = {n for n in row_names if row_names.count(n) > 1}
        for dup in sorted(local_dups):
            violations.append(f"{ident}: row_name {dup!r} repeated within the rule")
        for row_name in dict.fromkeys(row_names):
            owner = seen_names.get(row_name)
            if owner is not None:
                violations.append(
                    f"{ident}: duplicate row_name {row_name!r} (also mapped at {owner})"
                )
            else:
                seen_names[row_name] = ident

        advisory_range = None
        if lo_raw or hi_raw:
            try:
                low, high = float(lo_raw), float(hi_raw)
            except ValueError:
                violations.append(f"{ident}: malformed advisory range")
            else:
                if low < high:
                    advisory_range = (low, high)
                else:
                    violations.append(f"{ident}: advisory range min must be < max")

        if unit_rule and unit_rule not in KNOWN_UNIT_RULES:
            violations.append(f"{ident}: unknown unit_rule {unit_rule!r}")
            unit_rule = ""

        if violations:
            continue
        parsed.append(
            MappingRule(
                concept_id=concept_id,
                concept_code=code,
                vocabulary_id=vocabulary,
                concept_name=name,
                row_names=frozenset(row_names),
                advisory_range=advisory_range,
                unit_rule=unit_rule or None,
            )
        )

    if violations:
        raise MappingValidationError(violations)
    return MappingTable(tuple(parsed))


def save_mapping(table: MappingTable, path: str | Path) -> None:
    """Write a table in the mapping file format (load_mapping round-trips it)."""
    for rule in table.rules:
        for name in rule.row_names:
            if "|" in name:
                raise MappingValidationError(
                    [f"concept {rule.concept_id}: row_name {name!r} contains '|', "
                     "which the file format cannot carry"]
                )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, **CSV_KWARGS)
        writer.writerow(MAPPING_FIELDS)
        for rule in table.rules:
            low, high = ("", "")
            if rule.advisory_range is not None:
                low = "%g" % rule.advisory_range[0]
                high = "%g" % rule.advisory_range[1]
            writer.writerow(
                (
                    str(rule.concept_id),
                    rule.concept_code,
                    rule.vocabulary_id,
                    rule.concept_name,
                    "|".join(sorted(rule.row_names)),
                    low,
                    high,
                    rule.unit_rule or "",
                )
            )
