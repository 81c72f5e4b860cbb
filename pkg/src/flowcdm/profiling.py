"""Bounded-memory frequency analysis and substring discovery over record streams.

This is the curator's tooling: count how often each row name occurs,
rank the names, search them by substring (case-folded by default, since
discovery wants "temp" to find "Temp" and "Temperature"), and inspect
which template/group contexts a suspicious name appears under. Memory is
proportional to the number of distinct names, never to row count.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .ingest import ParseError
from .model import FlowsheetRecord


@dataclass
class FrequencyReport:
    """Occurrence counts per row name, with optional per-context counts."""

    counts: dict[str, int]
    total: int  # records consumed
    contexts: dict[str, dict[tuple[str, str], int]] | None = None


def count_row_names(
    stream: Iterable[FlowsheetRecord | ParseError],
    collect_contexts: bool = False,
) -> FrequencyReport:
    """One streaming pass; parse errors are skipped, not counted.

    Context collection is opt-in because it multiplies memory by the
    number of distinct (name, template, group) triples.
    """
    counts: Counter[str] = Counter()
    contexts: dict[str, Counter] | None = defaultdict(Counter) if collect_contexts else None
    total = 0
    for item in stream:
        if isinstance(item, ParseError):
            continue
        counts[item.row_name] += 1
        total += 1
        if contexts is not None:
            contexts[item.row_name][(item.template_name, item.group_name)] += 1
    return FrequencyReport(
        counts=dict(counts),
        total=total,
        contexts={name: dict(ctx) for name, ctx in contexts.items()}
        if contexts is not None
        else None,
    )


def _ranked(items: Iterable[tuple[str, int]]) -> list[tuple[str, int]]:
    # Count descending, then name ascending in byte order: total and
    # deterministic, so equal inputs render equal reports.
    return sorted(items, key=lambda kv: (-kv[1], kv[0]))


def top_n(report: FrequencyReport, n: int) -> list[tuple[str, int]]:
    """The n most frequent names; n beyond the distinct count returns all."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return _ranked(report.counts.items())[:n]


def substring_query(
    report: FrequencyReport,
    include: str,
    exclude: Sequence[str] = (),
    case_fold: bool = True,
) -> list[tuple[str, int]]:
    """Names containing `include` and none of `exclude`, ranked like top_n."""
    if not include:
        raise ValueError("include substring must not be empty")
    if case_fold:
        include = include.casefold()
        exclude = [term.casefold() for term in exclude]
    hits = []
    for name, count in report.counts.items():
        haystack = name.casefold() if case_fold else name
        if include in haystack and not any(term in haystack for term in exclude):
            hits.append((name, count))
    return _ranked(hits)


def context_report(
    report: FrequencyReport, row_name: str
) -> list[tuple[str, str, int]]:
    """(template, group, count) evidence for one name, most frequent first.

    This is the view that disqualifies equipment measures: a "TEMP" that
    lives under a machine-check group is not a body temperature.
    """
    if report.contexts is None:
        raise ValueError("contexts were not collected for this report")
    pairs = report.contexts.get(row_name, {})
    ranked = sorted(pairs.items(), key=lambda kv: (-kv[1], kv[0]))
    return [(template, group, count) for (template, group), count in ranked]
