"""The two output paths over one streaming pass.

Every valid record becomes a verbatim canonical-JSON OBSERVATION row
(censored entirely in de-identified mode, since free-text values can
carry names, phone numbers and other PHI), and every record whose row
name is in the curated mapping and whose value is numeric becomes a
MEASUREMENT row. Values are never cleaned or converted: advisory flags
annotate implausible or unit-ambiguous rows but never suppress them.

Outputs are written sorted by (patient, time, row name) through an
external merge sort, so reruns and worker fan-out produce byte-identical
files while memory stays bounded.
"""

from __future__ import annotations

import csv
import heapq
import json
import multiprocessing
import os
import re
import tempfile
from collections import Counter
from contextlib import ExitStack
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from typing import Iterable, Iterator, Sequence

from .ingest import CSV_KWARGS, ParseError, format_timestamp
from .model import (
    FLAG_OUT_OF_ADVISORY_RANGE,
    FLAG_UNIT_AMBIGUOUS,
    FlowsheetRecord,
    MappingTable,
    MeasurementRow,
    ObservationRow,
    TransformReport,
)

MODE_IDENTIFIED = "identified"
MODE_DEIDENTIFIED = "deidentified"
MODES = (MODE_IDENTIFIED, MODE_DEIDENTIFIED)

CELSIUS = "celsius"
FAHRENHEIT = "fahrenheit"
AMBIGUOUS = "ambiguous"

# Plausible body-temperature bands, one per scale. 45 C is far above any
# survivable reading and 86 F far below any charted one, so the bands
# cannot overlap; anything outside both is flagged, not guessed.
CELSIUS_BAND = (Decimal("30.0"), Decimal("45.0"))
FAHRENHEIT_BAND = (Decimal("86.0"), Decimal("113.0"))

OBS_FIELDS = (
    "person_id",
    "observation_concept_id",
    "observation_datetime",
    "provider_id",
    "observation_source_value",
    "value_as_string",
)
MEAS_FIELDS = (
    "person_id",
    "measurement_concept_id",
    "measurement_datetime",
    "provider_id",
    "value_as_number",
    "unit_inferred",
    "unit_source_value",
    "measurement_source_value",
    "value_source_value",
    "flags",
)

# Accepted numeric value grammar: optional sign, digits, optional single
# decimal point. No thousands separators, no exponents, no bare ".5".
_NUMERIC_RE = re.compile(r"[-+]?[0-9]+(?:\.[0-9]+)?")

DEFAULT_SORT_BUFFER_ROWS = 200_000
_CHUNK_RECORDS = 10_000


class Skip(Enum):
    """Why a record produced no measurement; a counted outcome, not an error."""

    UNMAPPED = "unmapped"
    NONNUMERIC = "nonnumeric"


@dataclass(frozen=True)
class TransformConfig:
    mapping: MappingTable
    mode: str = MODE_IDENTIFIED
    emit_observations: bool = True
    emit_measurements: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if not (self.emit_observations or self.emit_measurements):
            raise ValueError("at least one output path must be enabled")


def to_json_observation(record: FlowsheetRecord) -> ObservationRow:
    """Wrap a record's context/name/value verbatim in a canonical JSON payload.

    Key order is fixed, whitespace and escaping are minimal, so identical
    records always produce byte-identical payloads.
    """
    payload = json.dumps(
        {
            "template": record.template_name,
            "group": record.group_name,
            "row": record.row_name,
            "value": record.value,
            "unit": record.unit_source,
        },
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return ObservationRow(
        person_id=record.patient_id,
        observation_datetime=record.recorded_time,
        provider_id=record.provider_id,
        observation_source_value=record.row_name,
        value_as_string=payload,
    )


def censor(row: ObservationRow, mode: str) -> ObservationRow | None:
    """Identified mode passes the row through; de-identified suppresses it."""
    if mode == MODE_IDENTIFIED:
        return row
    if mode == MODE_DEIDENTIFIED:
        return None
    raise ValueError(f"unknown mode {mode!r}")


def parse_numeric(value: str) -> Decimal | None:
    """Parse a raw value under the numeric grammar; None is a normal outcome.

    The textual form is preserved ("37.20" stays "37.20") so values can be
    re-emitted bit-identically.
    """
    cleaned = value.strip()
    if _NUMERIC_RE.fullmatch(cleaned) is None:
        return None
    return Decimal(cleaned)


def infer_temperature_unit(value: Decimal | float | int) -> str:
    """Classify a unitless temperature reading by plausible-range band."""
    if CELSIUS_BAND[0] <= value <= CELSIUS_BAND[1]:
        return CELSIUS
    if FAHRENHEIT_BAND[0] <= value <= FAHRENHEIT_BAND[1]:
        return FAHRENHEIT
    return AMBIGUOUS


def to_measurement(
    record: FlowsheetRecord, mapping: MappingTable
) -> MeasurementRow | Skip:
    """Curated path for one record: exact-name lookup, then numeric filter.

    The parsed value is carried unmodified -- no unit conversion, no
    cleaning. Advisory-range violations and ambiguous units set flags but
    never drop the row.
    """
    rule = mapping.lookup(record.row_name)
    if rule is None:
        return Skip.UNMAPPED
    number = parse_numeric(record.value)
    if number is None:
        return Skip.NONNUMERIC

    flags = set()
    unit_inferred = None
    if rule.advisory_range is not None:
        low, high = rule.advisory_range
        if not low <= number <= high:
            flags.add(FLAG_OUT_OF_ADVISORY_RANGE)
    if rule.unit_rule == "temperature_c_or_f":
        unit = infer_temperature_unit(number)
        if unit == AMBIGUOUS:
            flags.add(FLAG_UNIT_AMBIGUOUS)
        else:
            unit_inferred = unit

    return MeasurementRow(
        person_id=record.patient_id,
        measurement_datetime=record.recorded_time,
        provider_id=record.provider_id,
        measurement_concept_id=rule.concept_id,
        value_as_number=number,
        measurement_source_value=record.row_name,
        value_source_value=record.value,
        unit_inferred=unit_inferred,
        unit_source_value=record.unit_source,
        flags=frozenset(flags),
    )


def format_observation_row(row: ObservationRow) -> tuple[str, ...]:
    return (
        row.person_id,
        str(row.observation_concept_id),
        format_timestamp(row.observation_datetime),
        row.provider_id,
        row.observation_source_value,
        row.value_as_string,
    )


def format_measurement_row(row: MeasurementRow) -> tuple[str, ...]:
    return (
        row.person_id,
        str(row.measurement_concept_id),
        format_timestamp(row.measurement_datetime),
        row.provider_id,
        str(row.value_as_number),
        row.unit_inferred or "",
        row.unit_source_value or "",
        row.measurement_source_value,
        row.value_source_value,
        ",".join(sorted(row.flags)),
    )


def _obs_sort_key(row: Sequence[str]):
    # (patient, time, row name), then the full row for a total order.
    return (row[0], row[2], row[4], tuple(row))


def _meas_sort_key(row: Sequence[str]):
    return (row[0], row[2], row[7], tuple(row))


class _ExternalSorter:
    """Sort arbitrarily many rows with a bounded in-memory buffer.

    Full buffers are sorted and spilled to run files under `tmpdir`; the
    final iteration merges the runs. Row counts far beyond memory stay
    cheap, small outputs never touch disk.
    """

    def __init__(self, key, tmpdir: str, tag: str, max_buffered_rows: int):
        self._key = key
        self._tmpdir = tmpdir
        self._tag = tag
        self._max = max(1, max_buffered_rows)
        self._buffer: list[tuple[str, ...]] = []
        self._runs: list[str] = []

    def add(self, row: tuple[str, ...]) -> None:
        self._buffer.append(row)
        if len(self._buffer) >= self._max:
            self._spill()

    def _spill(self) -> None:
        self._buffer.sort(key=self._key)
        path = os.path.join(self._tmpdir, f"{self._tag}-{len(self._runs):05d}.tsv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            csv.writer(fh, **CSV_KWARGS).writerows(self._buffer)
        self._runs.append(path)
        self._buffer = []

    def __iter__(self) -> Iterator[Sequence[str]]:
        self._buffer.sort(key=self._key)
        if not self._runs:
            yield from self._buffer
            return
        with ExitStack() as stack:
            streams: list[Iterable[Sequence[str]]] = [
                csv.reader(
                    stack.enter_context(open(p, encoding="utf-8", newline="")),
                    **CSV_KWARGS,
                )
                for p in self._runs
            ]
            streams.append(iter(self._buffer))
            yield from heapq.merge(*streams, key=self._key)


@dataclass
class _ChunkOutput:
    obs_rows: list[tuple[str, ...]] = field(default_factory=list)
    meas_rows: list[tuple[str, ...]] = field(default_factory=list)
    observations: int = 0
    measurements: int = 0
    unmapped: int = 0
    nonnumeric: int = 0
    flagged: int = 0
    per_concept: Counter = field(default_factory=Counter)
    patients: set = field(default_factory=set)
    skipped_names: Counter = field(default_factory=Counter)


def transform_chunk(
    records: Sequence[FlowsheetRecord],
    config: TransformConfig,
    collect_skipped: bool = False,
) -> _ChunkOutput:
    """Map one batch of records; pure function, safe to run in any worker."""
    out = _ChunkOutput()
    emit_obs = config.emit_observations and config.mode == MODE_IDENTIFIED
    for record in records:
        if emit_obs:
            out.obs_rows.append(format_observation_row(to_json_observation(record)))
            out.observations += 1
        if config.emit_measurements:
            result = to_measurement(record, config.mapping)
            if isinstance(result, Skip):
                if result is Skip.UNMAPPED:
                    out.unmapped += 1
                else:
                    out.nonnumeric += 1
                if collect_skipped:
                    out.skipped_names[record.row_name] += 1
            else:
                out.meas_rows.append(format_measurement_row(result))
                out.measurements += 1
                out.per_concept[result.measurement_concept_id] += 1
                out.patients.add(result.person_id)
                if result.flags:
                    out.flagged += 1
    return out


_worker_config: TransformConfig | None = None
_worker_collect_skipped = False


def _init_worker(config: TransformConfig, collect_skipped: bool) -> None:
    global _worker_config, _worker_collect_skipped
    _worker_config = config
    _worker_collect_skipped = collect_skipped


def _transform_chunk_task(records: Sequence[FlowsheetRecord]) -> _ChunkOutput:
    return transform_chunk(records, _worker_config, _worker_collect_skipped)


class _Tally:
    __slots__ = ("records_in", "rejected")

    def __init__(self):
        self.records_in = 0
        self.rejected = 0


def _iter_record_chunks(stream, tally: _Tally) -> Iterator[list[FlowsheetRecord]]:
    chunk: list[FlowsheetRecord] = []
    for item in stream:
        tally.records_in += 1
        if isinstance(item, ParseError):
            tally.rejected += 1
            continue
        chunk.append(item)
        if len(chunk) >= _CHUNK_RECORDS:
            yield chunk
            chunk = []
    if chunk:
        yield chunk


def write_report(report: TransformReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def render_report(report: TransformReport) -> str:
    lines = [
        f"records in              {report.records_in:>12}",
        f"rejected at parse       {report.records_rejected_parse:>12}",
        f"observations emitted    {report.observations_emitted:>12}",
        f"measurements emitted    {report.measurements_emitted:>12}",
        f"skipped: unmapped       {report.skipped_unmapped:>12}",
        f"skipped: non-numeric    {report.skipped_nonnumeric:>12}",
        f"flagged (advisory)      {report.flagged_count:>12}",
        f"distinct patients       {report.distinct_patients:>12}",
    ]
    return "\n".join(lines)


def run_pipeline(
    stream,
    config: TransformConfig,
    obs_path: str | None,
    meas_path: str | None,
    *,
    report_path: str | None = None,
    skipped_names_path: str | None = None,
    workers: int = 1,
    sort_buffer_rows: int = DEFAULT_SORT_BUFFER_ROWS,
    tmp_dir: str | None = None,
) -> TransformReport:
    """Run both paths over `stream` in a single pass and write the outputs.

    Outputs are sorted by (patient, time, row name) before the final
    write, so identical input and config yield byte-identical files
    regardless of `workers`. Any I/O failure removes the partial output
    files before the exception propagates.
    """
    if config.emit_observations and obs_path is None:
        raise ValueError("obs_path is required when emit_observations is set")
    if config.emit_measurements and meas_path is None:
        raise ValueError("meas_path is required when emit_measurements is set")
    if workers < 1:
        raise ValueError("workers must be >= 1")

    tally = _Tally()
    totals = _ChunkOutput()
    created: list[str] = []
    try:
        with ExitStack() as stack:
            tmpdir = stack.enter_context(
                tempfile.TemporaryDirectory(prefix="flowcdm-sort-", dir=tmp_dir)
            )
            obs_writer = meas_writer = None
            if config.emit_observations:
                fh = stack.enter_context(
                    open(obs_path, "w", encoding="utf-8", newline="")
                )
                created.append(obs_path)
                obs_writer = csv.writer(fh, **CSV_KWARGS)
                obs_writer.writerow(OBS_FIELDS)
            if config.emit_measurements:
                fh = stack.enter_context(
                    open(meas_path, "w", encoding="utf-8", newline="")
                )
                created.append(meas_path)
                meas_writer = csv.writer(fh, **CSV_KWARGS)
                meas_writer.writerow(MEAS_FIELDS)

            obs_sorter = _ExternalSorter(_obs_sort_key, tmpdir, "obs", sort_buffer_rows)
            meas_sorter = _ExternalSorter(
                _meas_sort_key, tmpdir, "meas", sort_buffer_rows
            )
            collect_skipped = skipped_names_path is not None

            chunks = _iter_record_chunks(stream, tally)
            if workers == 1:
                results = (
                    transform_chunk(chunk, config, collect_skipped) for chunk in chunks
                )
                pool = None
            else:
                ctx = multiprocessing.get_context()
                pool = stack.enter_context(
                    ctx.Pool(workers, _init_worker, (config, collect_skipped))
                )
                results = pool.imap(_transform_chunk_task, chunks)

            for out in results:
                for row in out.obs_rows:
                    obs_sorter.add(row)
                for row in out.meas_rows:
                    meas_sorter.add(row)
                totals.observations += out.observations
                totals.measurements += out.measurements
                totals.unmapped += out.unmapped
                totals.nonnumeric += out.nonnumeric
                totals.flagged += out.flagged
                totals.per_concept.update(out.per_concept)
                totals.patients.update(out.patients)
                if collect_skipped:
                    totals.skipped_names.update(out.skipped_names)
            if pool is not None:
                pool.close()
                pool.join()

            if obs_writer is not None:
                for row in obs_sorter:
                    obs_writer.writerow(row)
            if meas_writer is not None:
                for row in meas_sorter:
                    meas_writer.writerow(row)

        report = TransformReport(
            records_in=tally.records_in,
            records_rejected_parse=tally.rejected,
            observations_emitted=totals.observations,
            measurements_emitted=totals.measurements,
            skipped_unmapped=totals.unmapped,
            skipped_nonnumeric=totals.nonnumeric,
            flagged_count=totals.flagged,
            per_concept_counts=dict(totals.per_concept),
            distinct_patients=len(totals.patients),
        )

        if skipped_names_path is not None:
            with open(skipped_names_path, "w", encoding="utf-8", newline="") as fh:
                created.append(skipped_names_path)
                writer = csv.writer(fh, **CSV_KWARGS)
                writer.writerow(("row_name", "count"))
                ordered = sorted(
                    totals.skipped_names.items(), key=lambda kv: (-kv[1], kv[0])
                )
                writer.writerows((name, str(n)) for name, n in ordered)
        if report_path is not None:
            created.append(report_path)
            write_report(report, report_path)
    except BaseException:
        for path in created:
            try:
                os.remove(path)
            except OSError:
                pass
        raise
    return report
