"""Deterministic synthetic flowsheet corpus generator.

Row-name frequencies default to production-scale counts for the
temperature and heart-rate name families, so a desk-scale corpus shows
the same skew, near-duplicate naming, and contamination a curator meets
in a real extract: a dominant "Heart Rate" diluted by small integer
early-warning scores, temperatures charted in both scales without units,
an equipment "TEMP" whose values sit in the thousands, and a slice of
free-text rows carrying synthetic names and phone numbers to exercise
de-identification. Identical spec (and seed) means byte-identical output.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from itertools import accumulate
from typing import Iterator, Mapping

from .model import FlowsheetRecord

# Weights for the temperature-related name family (occurrence counts of
# the top 30 such row names in a large production extract).
TEMPERATURE_NAME_COUNTS: tuple[tuple[str, int], ...] = (
    ("Temp", 43_163_193),
    ("Temp src", 25_256_950),
    ("Temp (in Celsius)", 12_952_769),
    ("Tcore", 4_506_680),
    ("Temp Source", 4_050_492),
    ("In last 6 hours temperature < 36 C or > 38.3 C", 2_252_506),
    ("RLE Temperature/Condition", 1_881_329),
    ("LLE Temperature/Condition", 1_846_976),
    ("LUE Temperature/Condition", 1_834_203),
    ("Temperature RLE", 1_832_733),
    ("Temperature LLE", 1_825_700),
    ("Temperature RUE", 1_812_643),
    ("Temperature LUE", 1_810_598),
    ("RUE Temperature/Condition", 1_779_112),
    ("Skin Temp, Distal to Site", 1_290_322),
    ("Temp < 36 C (96.8 F) or >38.3 C (100.9 F)", 1_092_763),
    ("Humidifier Temperature", 730_136),
    ("Temperature", 706_614),
    ("Temp 2", 545_497),
    ("Bed Set Temp", 494_263),
    ("Humidifier Temperature (C)", 488_507),
    ("Temperature (Blood - PA line)", 428_304),
    ("Temperature Skin", 389_905),
    ("Temperature greater than 35.5 C Ax. or 36 C oral within 45 minutes of discharge", 375_659),
    ("Temp Control", 320_951),
    ("Air Temp", 315_910),
    ("Circuit Water Temperature", 168_098),
    ("Temp Pacer Ventricular mA", 140_225),
    ("Temperature > 37.8 C", 129_706),
    ("Patient Core Temperature", 98_642),
)

# Weights for the heart-rate-related name family (top 22, same source).
HEART_RATE_NAME_COUNTS: tuple[tuple[str, int], ...] = (
    ("Heart Rate", 84_587_071),
    ("PEWS Heart Rate Score", 10_377_491),
    ("Post RT Treatment Heart Rate", 1_128_175),
    ("Heart Rate Score", 915_259),
    ("Fetal Heart Rate", 146_895),
    ("Heart Rate Source", 71_183),
    ("2.Heart Rate greater than 110 beats/minute", 30_267),
    ("Max Heart Rate (bpm)", 3_008),
    ("Resting Heart Rate (bpm)", 3_007),
    ("Heart Rate Recovery at 1 minute (bpm)", 3_005),
    ("Measured Heart Rate Max", 2_443),
    ("Fetal Heart Rate (FHR)", 1_845),
    ("Fetal Heart Rate auscultated for more than 60 seconds", 1_124),
    ("Heart Rate Used", 878),
    ("6 Minutes Heart Rate", 816),
    ("Baseline Heart Rate", 810),
    ("Heart Rate (b/min)", 337),
    ("In the last month, how many times a week do you usually do 30 minutes or more "
     "of moderate-intensity physical activity that increases your heart rate or makes "
     "you breathe harder than normal? (e.g., carrying light loads, bicycling at a "
     "regular pace, or doubles tennis)", 282),
    ("Fetal Heart Rate Monitoring", 201),
    ("Beginning O2 Heart Rate", 200),
    ("Ending O2 Heart Rate", 199),
    ("Heart Rate > 100?", 75),
)

# Names the curated mapping matches exactly as charted. Weights are a
# deliberate artifact of this generator, kept modest so no single exact
# name outweighs the dominant vital-sign names above.
EXACT_MATCH_NAME_WEIGHTS: tuple[tuple[str, int], ...] = (
    ("Height", 2_000_000),
    ("Weight", 3_000_000),
    ("O2", 4_000_000),
    ("N2O", 1_000_000),
    ("Pain Level - 1st Site", 6_000_000),
)

# Equipment measures that look like vitals by name but are not.
EQUIPMENT_NAME_WEIGHTS: tuple[tuple[str, int], ...] = (
    ("TEMP", 500_000),
    ("(Retired) Temp", 120_000),
)

# Quality/checklist rows whose free-text values stand in for the PHI-like
# content (names, phone numbers, addresses) found in real feeds.
NOISE_NAMES: tuple[str, ...] = (
    "Bedrails Lifted Order",
    "Discharge Pickup Driver",
    "Patient Belongings Note",
    "Room Safety Check Comment",
    "Visitor Log Entry",
    "Shift Handoff Note",
)

DEFAULT_NOISE_FRACTION = 0.05
DEFAULT_PATIENTS = 500

DEFAULT_CONTEXT = ("Flowsheet", "General Assessment")

NAME_CONTEXTS: dict[str, tuple[str, str]] = {
    "Temp": ("Vitals", "Vital Signs"),
    "Temperature": ("Vitals", "Vital Signs"),
    "Temp (in Celsius)": ("Vitals", "Vital Signs"),
    "Tcore": ("Critical Care", "Vital Signs"),
    "Temp src": ("Vitals", "Vital Signs"),
    "Temp Source": ("Vitals", "Vital Signs"),
    "Temp 2": ("Vitals", "Vital Signs"),
    "TEMP": ("Dialysis", "HD Machine Check"),
    "(Retired) Temp": ("Special Equipment", "Targeted Temperature Management"),
    "Humidifier Temperature": ("Respiratory", "Ventilator Settings"),
    "Humidifier Temperature (C)": ("Respiratory", "Ventilator Settings"),
    "Bed Set Temp": ("Special Equipment", "Bed Settings"),
    "Air Temp": ("Special Equipment", "Incubator"),
    "Circuit Water Temperature": ("Special Equipment", "ECMO Circuit"),
    "Temperature (Blood - PA line)": ("Critical Care", "Hemodynamics"),
    "Temp Pacer Ventricular mA": ("Critical Care", "Pacing"),
    "Patient Core Temperature": ("Critical Care", "Vital Signs"),
    "Temp Control": ("Special Equipment", "Targeted Temperature Management"),
    "RLE Temperature/Condition": ("Assessment", "Skin Assessment"),
    "LLE Temperature/Condition": ("Assessment", "Skin Assessment"),
    "LUE Temperature/Condition": ("Assessment", "Skin Assessment"),
    "RUE Temperature/Condition": ("Assessment", "Skin Assessment"),
    "Temperature RLE": ("Assessment", "Skin Assessment"),
    "Temperature LLE": ("Assessment", "Skin Assessment"),
    "Temperature RUE": ("Assessment", "Skin Assessment"),
    "Temperature LUE": ("Assessment", "Skin Assessment"),
    "Temperature Skin": ("Assessment", "Skin Assessment"),
    "Skin Temp, Distal to Site": ("Assessment", "Skin Assessment"),
    "In last 6 hours temperature < 36 C or > 38.3 C": ("Screening", "Early Warning Criteria"),
    "Temp < 36 C (96.8 F) or >38.3 C (100.9 F)": ("Screening", "Early Warning Criteria"),
    "Temperature greater than 35.5 C Ax. or 36 C oral within 45 minutes of discharge": ("Screening", "Early Warning Criteria"),
    "Temperature > 37.8 C": ("Screening", "Early Warning Criteria"),
    "Heart Rate": ("Vitals", "Vital Signs"),
    "Heart Rate Source": ("Vitals", "Vital Signs"),
    "PEWS Heart Rate Score": ("Pediatric Assessment", "PEWS"),
    "Heart Rate Score": ("Pediatric Assessment", "PEWS"),
    "2.Heart Rate greater than 110 beats/minute": ("Screening", "Early Warning Criteria"),
    "Heart Rate > 100?": ("Screening", "Early Warning Criteria"),
    "Fetal Heart Rate": ("Obstetrics", "Fetal Monitoring"),
    "Fetal Heart Rate (FHR)": ("Obstetrics", "Fetal Monitoring"),
    "Fetal Heart Rate auscultated for more than 60 seconds": ("Obstetrics", "Fetal Monitoring"),
    "Fetal Heart Rate Monitoring": ("Obstetrics", "Fetal Monitoring"),
    "Post RT Treatment Heart Rate": ("Therapy", "Exercise Tolerance"),
    "Max Heart Rate (bpm)": ("Therapy", "Exercise Tolerance"),
    "Resting Heart Rate (bpm)": ("Therapy", "Exercise Tolerance"),
    "Heart Rate Recovery at 1 minute (bpm)": ("Therapy", "Exercise Tolerance"),
    "Measured Heart Rate Max": ("Therapy", "Exercise Tolerance"),
    "Heart Rate Used": ("Therapy", "Exercise Tolerance"),
    "6 Minutes Heart Rate": ("Therapy", "Exercise Tolerance"),
    "Baseline Heart Rate": ("Therapy", "Exercise Tolerance"),
    "Heart Rate (b/min)": ("Therapy", "Exercise Tolerance"),
    "Beginning O2 Heart Rate": ("Therapy", "Exercise Tolerance"),
    "Ending O2 Heart Rate": ("Therapy", "Exercise Tolerance"),
    "Height": ("Vitals", "Vital Signs"),
    "Weight": ("Vitals", "Vital Signs"),
    "O2": ("Respiratory", "Oxygen Therapy"),
    "N2O": ("Anesthesia", "Gas Delivery"),
    "Pain Level - 1st Site": ("Assessment", "Pain Assessment"),
    "Bedrails Lifted Order": ("Routine Care", "Safety Checklist"),
    "Discharge Pickup Driver": ("Discharge", "Discharge Planning"),
    "Patient Belongings Note": ("Admission", "Belongings"),
    "Room Safety Check Comment": ("Routine Care", "Safety Checklist"),
    "Visitor Log Entry": ("Routine Care", "Visitors"),
    "Shift Handoff Note": ("Nursing", "Handoff"),
}

# The heart-rate question above is a questionnaire item, not a vital.
NAME_CONTEXTS[HEART_RATE_NAME_COUNTS[17][0]] = ("Screening", "Questionnaires")


def _numeric(low: float, high: float, decimals: int = 1, **extra) -> dict:
    return {"type": "numeric-range", "low": low, "high": high,
            "decimals": decimals, **extra}


def _integer(low: int, high: int, **extra) -> dict:
    return {"type": "integer-range", "low": low, "high": high, **extra}


def _categorical(choices, weights=None, **extra) -> dict:
    model = {"type": "categorical", "choices": list(choices), **extra}
    if weights is not None:
        model["weights"] = list(weights)
    return model


def _free_text(**extra) -> dict:
    return {"type": "free-text", **extra}


def _mix(*parts: tuple[float, dict]) -> dict:
    return {"type": "mix",
            "parts": [{"weight": w, "model": m} for w, m in parts]}


_YES_NO = _categorical(("No", "Yes"), weights=(85, 15))
_SKIN_CONDITION = _categorical(("Warm/Dry", "Warm/Moist", "Cool/Dry", "Cool/Moist"))
# Temperatures arrive in either scale, usually without a unit label.
_BODY_TEMP = _mix(
    (0.6, _numeric(35, 40, unit_label="deg C", unit_fraction=0.1)),
    (0.4, _numeric(95, 104, unit_label="deg F", unit_fraction=0.1)),
)
# Small integer early-warning scores charted under the plain vital name;
# 2 is by far the most common score, so it dominates the value histogram.
_PEWS_SCORE = _categorical(("0", "1", "2", "3", "4"), weights=(10, 20, 45, 15, 10))

DEFAULT_VALUE_MODELS: dict[str, dict] = {
    "Temp": _BODY_TEMP,
    "Temperature": _BODY_TEMP,
    "Tcore": _BODY_TEMP,
    "Temp 2": _BODY_TEMP,
    "Temp (in Celsius)": _numeric(35, 40, unit_label="deg C", unit_fraction=0.1),
    "TEMP": _integer(1000, 9999),
    "(Retired) Temp": _numeric(30, 40),
    "Temp src": _categorical(("Oral", "Axillary", "Tympanic", "Temporal", "Rectal", "Skin")),
    "Temp Source": _categorical(("Oral", "Axillary", "Tympanic", "Temporal", "Rectal", "Skin")),
    "RLE Temperature/Condition": _SKIN_CONDITION,
    "LLE Temperature/Condition": _SKIN_CONDITION,
    "LUE Temperature/Condition": _SKIN_CONDITION,
    "RUE Temperature/Condition": _SKIN_CONDITION,
    "Temperature RLE": _SKIN_CONDITION,
    "Temperature LLE": _SKIN_CONDITION,
    "Temperature RUE": _SKIN_CONDITION,
    "Temperature LUE": _SKIN_CONDITION,
    "Temperature Skin": _SKIN_CONDITION,
    "Skin Temp, Distal to Site": _SKIN_CONDITION,
    "In last 6 hours temperature < 36 C or > 38.3 C": _YES_NO,
    "Temp < 36 C (96.8 F) or >38.3 C (100.9 F)": _YES_NO,
    "Temperature greater than 35.5 C Ax. or 36 C oral within 45 minutes of discharge": _YES_NO,
    "Temperature > 37.8 C": _YES_NO,
    "Humidifier Temperature": _numeric(28, 40),
    "Humidifier Temperature (C)": _numeric(28, 40),
    "Bed Set Temp": _numeric(20, 38),
    "Air Temp": _numeric(18, 30),
    "Circuit Water Temperature": _numeric(34, 39),
    "Temperature (Blood - PA line)": _numeric(35, 40),
    "Patient Core Temperature": _numeric(35, 40),
    "Temp Control": _categorical(("On", "Off", "Standby")),
    "Temp Pacer Ventricular mA": _numeric(0, 25),
    "Heart Rate": _mix(
        (0.7, _integer(40, 180)),
        (0.3, {**_PEWS_SCORE, "template": "Pediatric Assessment", "group": "PEWS"}),
    ),
    "PEWS Heart Rate Score": _PEWS_SCORE,
    "Heart Rate Score": _PEWS_SCORE,
    "Post RT Treatment Heart Rate": _integer(50, 150),
    "Fetal Heart Rate": _integer(110, 160),
    "Fetal Heart Rate (FHR)": _integer(110, 160),
    "Heart Rate Source": _categorical(("Monitor", "Palpated", "Doppler")),
    "2.Heart Rate greater than 110 beats/minute": _YES_NO,
    "Max Heart Rate (bpm)": _integer(120, 200),
    "Resting Heart Rate (bpm)": _integer(50, 90),
    "Heart Rate Recovery at 1 minute (bpm)": _integer(60, 120),
    "Measured Heart Rate Max": _integer(120, 200),
    "Fetal Heart Rate auscultated for more than 60 seconds": _YES_NO,
    "Heart Rate Used": _integer(50, 180),
    "6 Minutes Heart Rate": _integer(80, 160),
    "Baseline Heart Rate": _integer(55, 100),
    "Heart Rate (b/min)": _integer(40, 180),
    HEART_RATE_NAME_COUNTS[17][0]: _integer(0, 7),
    "Fetal Heart Rate Monitoring": _categorical(("Continuous", "Intermittent")),
    "Beginning O2 Heart Rate": _integer(60, 140),
    "Ending O2 Heart Rate": _integer(60, 140),
    "Heart Rate > 100?": _YES_NO,
    "Height": _numeric(45, 200),
    "Weight": _numeric(2, 180),
    "O2": _numeric(0.5, 15),
    "N2O": _numeric(0, 70),
    "Pain Level - 1st Site": _mix(
        (0.9, _integer(0, 10)),
        (0.1, _categorical(("No", "Yes"))),
    ),
    **{name: _free_text() for name in NOISE_NAMES},
}

_FALLBACK_MODEL = _numeric(0, 200)

_FIRST_NAMES = ("Alex", "Sam", "Jordan", "Taylor", "Morgan", "Casey", "Riley", "Jamie")
_LAST_NAMES = ("Smith", "Jones", "Garcia", "Chen", "Patel", "Nguyen", "Brown", "Davis")

_BASE_TIME = datetime(2019, 1, 1, tzinfo=timezone.utc)
_SECONDS_PER_YEAR = 365 * 24 * 3600
_BATCH = 10_000

_SPEC_KEYS = ("seed", "total_rows", "patients", "name_weights", "value_models",
              "noise_fraction")


@dataclass(frozen=True)
class GeneratorSpec:
    """Everything that determines a corpus; two equal specs generate
    identical byte streams."""

    seed: int
    total_rows: int
    patients: int = DEFAULT_PATIENTS
    name_weights: tuple[tuple[str, float], ...] = ()
    value_models: Mapping[str, dict] = field(default_factory=dict)

    def __post_init__(self):
        if self.total_rows <= 0:
            raise ValueError("total_rows must be positive")
        if self.patients <= 0:
            raise ValueError("patients must be positive")
        weights = tuple((name, float(w)) for name, w in self.name_weights)
        if not weights:
            raise ValueError("name_weights must not be empty")
        if any(w <= 0 for _, w in weights):
            raise ValueError("name weights must be positive")
        object.__setattr__(self, "name_weights", weights)
        object.__setattr__(self, "value_models", dict(self.value_models))


def default_name_weights(
    noise_fraction: float = DEFAULT_NOISE_FRACTION,
) -> tuple[tuple[str, float], ...]:
    """Default weights; `noise_fraction` is the share of rows drawn from
    the free-text noise names."""
    if not 0 <= noise_fraction < 1:
        raise ValueError("noise_fraction must be in [0, 1)")
    weights: list[tuple[str, float]] = []
    for table in (TEMPERATURE_NAME_COUNTS, HEART_RATE_NAME_COUNTS,
                  EXACT_MATCH_NAME_WEIGHTS, EQUIPMENT_NAME_WEIGHTS):
        weights.extend((name, float(count)) for name, count in table)
    if noise_fraction > 0:
        base_total = sum(w for _, w in weights)
        share = base_total * noise_fraction / (1 - noise_fraction) / len(NOISE_NAMES)
        weights.extend((name, share) for name in NOISE_NAMES)
    return tuple(weights)


def default_spec(
    seed: int,
    total_rows: int,
    patients: int = DEFAULT_PATIENTS,
    noise_fraction: float = DEFAULT_NOISE_FRACTION,
) -> GeneratorSpec:
    return GeneratorSpec(
        seed=seed,
        total_rows=total_rows,
        patients=patients,
        name_weights=default_name_weights(noise_fraction),
        value_models=DEFAULT_VALUE_MODELS,
    )


def spec_from_config(data: Mapping) -> GeneratorSpec:
    """Build a spec from plain config data (the `gen --spec` file format).

    Omitted keys fall back to the defaults; `value_models` entries
    override the default model for that name only.
    """
    unknown = set(data) - set(_SPEC_KEYS)
    if unknown:
        raise ValueError(f"unknown spec keys: {', '.join(sorted(unknown))}")
    noise_fraction = data.get("noise_fraction", DEFAULT_NOISE_FRACTION)
    if "name_weights" in data:
        name_weights = tuple((str(n), float(w)) for n, w in data["name_weights"])
    else:
        name_weights = default_name_weights(noise_fraction)
    value_models = dict(DEFAULT_VALUE_MODELS)
    value_models.update(data.get("value_models", {}))
    return GeneratorSpec(
        seed=int(data.get("seed", 7)),
        total_rows=int(data.get("total_rows", 0)),
        patients=int(data.get("patients", DEFAULT_PATIENTS)),
        name_weights=name_weights,
        value_models=value_models,
    )


def load_spec(path) -> GeneratorSpec:
    with open(path, encoding="utf-8") as fh:
        return spec_from_config(json.load(fh))


def _sample_free_text(rng: random.Random) -> str:
    who = f"{rng.choice(_FIRST_NAMES)} {rng.choice(_LAST_NAMES)}"
    kind = rng.randrange(4)
    if kind == 0:
        return f"call {who} at 555-{rng.randrange(10_000):04d}"
    if kind == 1:
        return f"{who} picked up at discharge"
    if kind == 2:
        return f"{rng.randrange(100, 9_900)} Main St apt {rng.randrange(1, 40)}; contact {who}"
    return f"belongings logged by {who}, bag {rng.randrange(1, 999):03d}"


def _sample_value(
    model: dict, rng: random.Random
) -> tuple[str, str | None, tuple[str, str] | None]:
    """Draw (value, unit_source, context-override) from a value model."""
    kind = model["type"]
    if kind == "mix":
        parts = model["parts"]
        part = rng.choices(parts, weights=[p["weight"] for p in parts], k=1)[0]
        return _sample_value(part["model"], rng)

    context = None
    if "template" in model and "group" in model:
        context = (model["template"], model["group"])

    if kind == "numeric-range":
        decimals = model.get("decimals", 1)
        value = f"{rng.uniform(model['low'], model['high']):.{decimals}f}"
        unit = None
        label = model.get("unit_label")
        if label is not None and rng.random() < model.get("unit_fraction", 0.0):
            unit = label
        return value, unit, context
    if kind == "integer-range":
        return str(rng.randint(model["low"], model["high"])), None, context
    if kind == "categorical":
        choice = rng.choices(model["choices"], weights=model.get("weights"), k=1)[0]
        return choice, None, context
    if kind == "free-text":
        return _sample_free_text(rng), None, context
    raise ValueError(f"unknown value model type {kind!r}")


def generate(spec: GeneratorSpec) -> Iterator[FlowsheetRecord]:
    """Yield exactly spec.total_rows records, reproducibly from the seed."""
    rng = random.Random(spec.seed)
    names = [name for name, _ in spec.name_weights]
    cum_weights = list(accumulate(w for _, w in spec.name_weights))
    models = {n: spec.value_models.get(n, _FALLBACK_MODEL) for n in names}
    contexts = {n: NAME_CONTEXTS.get(n, DEFAULT_CONTEXT) for n in names}

    remaining = spec.total_rows
    while remaining > 0:
        batch = min(_BATCH, remaining)
        remaining -= batch
        for name in rng.choices(names, cum_weights=cum_weights, k=batch):
            patient_id = f"p{rng.randrange(spec.patients):06d}"
            recorded_time = _BASE_TIME + timedelta(
                seconds=rng.randrange(_SECONDS_PER_YEAR)
            )
            provider_id = "" if rng.random() < 0.05 else f"rn{rng.randrange(1, 400)}"
            value, unit_source, context = _sample_value(models[name], rng)
            template_name, group_name = context or contexts[name]
            yield FlowsheetRecord(
                patient_id=patient_id,
                recorded_time=recorded_time,
                provider_id=provider_id,
                template_name=template_name,
                group_name=group_name,
                row_name=name,
                value=value,
                unit_source=unit_source,
            )
