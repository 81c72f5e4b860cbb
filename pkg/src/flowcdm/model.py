"""Domain types shared by every pipeline stage. No I/O here.

All types are immutable after construction and safe to share across
concurrent pipeline stages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from decimal import Decimal

# OMOP "No matching concept"; anchors the verbatim JSON observation rows.
OBSERVATION_UNMAPPED_CONCEPT_ID = 0

# Advisory flags. Flags annotate a measurement row but never suppress it.
FLAG_OUT_OF_ADVISORY_RANGE = "out_of_advisory_range"
FLAG_UNIT_AMBIGUOUS = "unit_ambiguous"

# Unit-inference procedures a mapping rule may name.
KNOWN_UNIT_RULES = ("temperature_c_or_f",)


class MappingValidationError(ValueError):
    """A mapping table (file or in-memory rules) breaks an invariant."""

    def __init__(self, violations: list[str] | tuple[str, ...] | str):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class FlowsheetRecord:
    """One raw flowsheet entry, exactly as charted."""

    patient_id: str  # opaque, non-empty
    recorded_time: datetime  # UTC, second precision
    provider_id: str  # may be empty
    template_name: str
    group_name: str
    row_name: str  # case-preserved; never folded anywhere downstream
    value: str  # verbatim apart from surrounding-whitespace trim at parse
    unit_source: str | None = None  # unit as recorded, usually absent


@dataclass(frozen=True)
class MappingRule:
    """Row names that map to one standard concept, plus value constraints."""

    concept_id: int  # positive OMOP concept id
    concept_code: str  # e.g. "8310-5"
    vocabulary_id: str  # e.g. "LOINC"
    concept_name: str
    row_names: frozenset[str]  # exact-match, case-sensitive
    advisory_range: tuple[float, float] | None = None  # plausibility flagging only
    unit_rule: str | None = None  # names a unit-inference procedure

    def __post_init__(self):
        object.__setattr__(self, "row_names", frozenset(self.row_names))
        problems = []
        if self.concept_id <= 0:
            problems.append(f"concept {self.concept_id}: concept_id must be positive")
        if not self.row_names:
            problems.append(f"concept {self.concept_id}: empty row_names")
        if self.advisory_range is not None:
            low, high = self.advisory_range
            if not low < high:
                problems.append(
                    f"concept {self.concept_id}: advisory range min must be < max"
                )
        if self.unit_rule is not None and self.unit_rule not in KNOWN_UNIT_RULES:
            problems.append(
                f"concept {self.concept_id}: unknown unit_rule {self.unit_rule!r}"
            )
        if problems:
            raise MappingValidationError(problems)


@dataclass(frozen=True)
class MappingTable:
    """Lookup table over mapping rules; each row name belongs to exactly one rule."""

    rules: tuple[MappingRule, ...]
    index: dict[str, MappingRule] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        index: dict[str, MappingRule] = {}
        duplicates = []
        for rule in self.rules:
            for name in sorted(rule.row_names):
                other = index.get(name)
                if other is not None:
                    duplicates.append(
                        f"duplicate row_name {name!r} (concepts "
                        f"{other.concept_id} and {rule.concept_id})"
                    )
                else:
                    index[name] = rule
        if duplicates:
            raise MappingValidationError(duplicates)
        object.__setattr__(self, "index", index)

    def lookup(self, row_name: str) -> MappingRule | None:
        """Exact, case-sensitive, whole-string match; absence is normal."""
        return self.index.get(row_name)

    def __len__(self) -> int:
        return len(self.rules)


@dataclass(frozen=True)
class ObservationRow:
    """OMOP OBSERVATION output carrying the verbatim canonical-JSON payload."""

    person_id: str
    observation_datetime: datetime
    provider_id: str
    observation_source_value: str  # the row_name
    value_as_string: str  # canonical JSON
    observation_concept_id: int = OBSERVATION_UNMAPPED_CONCEPT_ID


@dataclass(frozen=True)
class MeasurementRow:
    """OMOP MEASUREMENT output for one mapped, numeric flowsheet entry."""

    person_id: str
    measurement_datetime: datetime
    provider_id: str
    measurement_concept_id: int
    value_as_number: Decimal  # exactly as parsed, never normalized
    measurement_source_value: str  # the row_name
    value_source_value: str  # the raw value string
    unit_inferred: str | None = None  # "celsius" | "fahrenheit", from a unit rule
    unit_source_value: str | None = None
    flags: frozenset[str] = frozenset()  # advisory only, never suppress the row


@dataclass(frozen=True)
class TransformReport:
    """Per-run accounting: rows in, emitted, skipped, flagged."""

    records_in: int = 0
    records_rejected_parse: int = 0
    observations_emitted: int = 0
    measurements_emitted: int = 0
    skipped_unmapped: int = 0
    skipped_nonnumeric: int = 0
    flagged_count: int = 0
    per_concept_counts: dict[int, int] = field(default_factory=dict)
    distinct_patients: int = 0

    def to_dict(self) -> dict:
        return {
            "records_in": self.records_in,
            "records_rejected_parse": self.records_rejected_parse,
            "observations_emitted": self.observations_emitted,
            "measurements_emitted": self.measurements_emitted,
            "skipped_unmapped": self.skipped_unmapped,
            "skipped_nonnumeric": self.skipped_nonnumeric,
            "flagged_count": self.flagged_count,
            "per_concept_counts": {
                str(cid): n for cid, n in sorted(self.per_concept_counts.items())
            },
            "distinct_patients": self.distinct_patients,
        }

    @classmethod
    def from_dict(cls, data: dict) -> TransformReport:
        return cls(
            records_in=data["records_in"],
            records_rejected_parse=data["records_rejected_parse"],
            observations_emitted=data["observations_emitted"],
            measurements_emitted=data["measurements_emitted"],
            skipped_unmapped=data["skipped_unmapped"],
            skipped_nonnumeric=data["skipped_nonnumeric"],
            flagged_count=data["flagged_count"],
            per_concept_counts={
                int(cid): n for cid, n in data["per_concept_counts"].items()
            },
            distinct_patients=data["distinct_patients"],
        )
