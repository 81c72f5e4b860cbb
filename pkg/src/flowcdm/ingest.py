"""Streaming reader/writer for the flowsheet interchange format.

Two encodings carry the same eight fields: tab-delimited with a fixed
header (RFC-4180-style quoting for embedded tabs/newlines) and JSON
lines. Readers buffer a single record at a time, so memory stays flat no
matter how long the file is; malformed rows come back as ParseError
values instead of aborting the stream. Paths ending in ".gz" are read
and written through gzip, and "-" means standard input.
"""

from __future__ import annotations

import csv
import gzip
import io
import json
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .model import FlowsheetRecord

FORMAT_DELIMITED = "delimited"
FORMAT_JSON_LINES = "json-lines"
FORMATS = (FORMAT_DELIMITED, FORMAT_JSON_LINES)

FIELDS = (
    "patient_id",
    "recorded_time",
    "provider_id",
    "template_name",
    "group_name",
    "row_name",
    "value",
    "unit_source",
)

# Shared csv settings for every delimited file this package touches.
CSV_KWARGS = dict(
    delimiter="\t",
    quotechar='"',
    quoting=csv.QUOTE_MINIMAL,
    lineterminator="\n",
)


@dataclass(frozen=True)
class ParseError:
    """One malformed record: counted, reported, never fatal."""

    line: int  # 1-based record ordinal within the file body
    reason: str


def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 timestamp to UTC at second precision.

    Naive timestamps are taken as UTC; offsets are converted; fractional
    seconds are truncated.
    """
    cleaned = text.strip()
    if cleaned.endswith(("Z", "z")):
        cleaned = cleaned[:-1] + "+00:00"
    parsed = datetime.fromisoformat(cleaned)
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    else:
        parsed = parsed.astimezone(timezone.utc)
    return parsed.replace(microsecond=0)


def format_timestamp(moment: datetime) -> str:
    if moment.tzinfo is not None:
        moment = moment.astimezone(timezone.utc)
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_record(fields: Sequence[str], line: int = 0) -> FlowsheetRecord | ParseError:
    """Turn one raw field tuple into a record.

    row_name and value keep their case; surrounding whitespace is trimmed
    from every field, interior whitespace of value is preserved.
    """
    if len(fields) != len(FIELDS):
        return ParseError(line, f"expected {len(FIELDS)} fields, got {len(fields)}")
    patient_id = fields[0].strip()
    time_text = fields[1].strip()
    provider_id = fields[2].strip()
    template_name = fields[3].strip()
    group_name = fields[4].strip()
    row_name = fields[5].strip()
    value = fields[6].strip()
    unit_source = fields[7].strip()
    if not patient_id:
        return ParseError(line, "empty patient_id")
    if not row_name:
        return ParseError(line, "empty row_name")
    try:
        recorded_time = parse_timestamp(time_text)
    except ValueError:
        return ParseError(line, f"bad timestamp {time_text!r}")
    return FlowsheetRecord(
        patient_id=patient_id,
        recorded_time=recorded_time,
        provider_id=provider_id,
        template_name=template_name,
        group_name=group_name,
        row_name=row_name,
        value=value,
        unit_source=unit_source or None,
    )


def _open_text(path: str | Path, mode: str):
    if str(path) == "-":
        return (sys.stdin if "r" in mode else sys.stdout), False
    if str(path).endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="utf-8", newline=""), True
    return open(path, mode, encoding="utf-8", newline=""), True


class RecordStream:
    """Single-consumer iterator of FlowsheetRecord | ParseError.

    `line` counts body records consumed so far (header excluded); with
    quoted embedded newlines one record may span several physical lines.
    """

    def __init__(self, source: str, fmt: str, fileobj, owns_file: bool):
        self.source = source
        self.format = fmt
        self.line = 0
        self._fh = fileobj
        self._owns_file = owns_file

    def __iter__(self) -> Iterator[FlowsheetRecord | ParseError]:
        if self.format == FORMAT_DELIMITED:
            for row in csv.reader(self._fh, **CSV_KWARGS):
                self.line += 1
                yield parse_record(row, self.line)
        else:
            for raw in self._fh:
                self.line += 1
                try:
                    obj = json.loads(raw)
                    if not isinstance(obj, dict):
                        raise ValueError("not an object")
                except ValueError:
                    yield ParseError(self.line, "invalid JSON object")
                    continue
                fields = tuple(_json_field(obj, name) for name in FIELDS)
                yield parse_record(fields, self.line)

    def records(self) -> Iterator[FlowsheetRecord]:
        """Iterate valid records only, silently dropping parse errors."""
        for item in self:
            if isinstance(item, FlowsheetRecord):
                yield item

    def close(self) -> None:
        if self._owns_file:
            self._fh.close()

    def __enter__(self) -> RecordStream:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _json_field(obj: dict, name: str) -> str:
    value = obj.get(name)
    if value is None:
        return ""
    return value if isinstance(value, str) else str(value)


def open_stream(path: str | Path, fmt: str = FORMAT_DELIMITED) -> RecordStream:
    """Open an interchange file (or "-" for stdin) for streaming reads.

    For the delimited format the first row must be the exact interchange
    header; a wrong header raises ValueError before any record is read.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    fileobj, owns = _open_text(path, "r")
    if fmt == FORMAT_DELIMITED:
        try:
            header = next(csv.reader(fileobj, **CSV_KWARGS), None)
        except (OSError, UnicodeDecodeError, csv.Error):
            if owns:
                fileobj.close()
            raise ValueError(f"{path}: unreadable header")
        if header != list(FIELDS):
            if owns:
                fileobj.close()
            raise ValueError(f"{path}: unreadable header {header!r}")
    return RecordStream(str(path), fmt, fileobj, owns)


def record_to_fields(record: FlowsheetRecord) -> tuple[str, ...]:
    return (
        record.patient_id,
        format_timestamp(record.recorded_time),
        record.provider_id,
        record.template_name,
        record.group_name,
        record.row_name,
        record.value,
        record.unit_source or "",
    )


def write_records(
    path: str | Path,
    records: Iterable[FlowsheetRecord],
    fmt: str = FORMAT_DELIMITED,
) -> int:
    """Stream records out in the requested encoding; returns rows written."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    fileobj, owns = _open_text(path, "w")
    count = 0
    try:
        if fmt == FORMAT_DELIMITED:
            writer = csv.writer(fileobj, **CSV_KWARGS)
            writer.writerow(FIELDS)
            for record in records:
                writer.writerow(record_to_fields(record))
                count += 1
        else:
            for record in records:
                fields = record_to_fields(record)
                obj = dict(zip(FIELDS, fields))
                obj["unit_source"] = record.unit_source
                fileobj.write(json.dumps(obj, ensure_ascii=False))
                fileobj.write("\n")
                count += 1
    finally:
        if owns:
            fileobj.close()
        elif isinstance(fileobj, io.TextIOBase):
            fileobj.flush()
    return count
