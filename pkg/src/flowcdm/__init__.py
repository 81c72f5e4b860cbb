"""flowcdm: streaming ETL from raw EHR flowsheet exports to OMOP-shaped tables.

Two output paths over one pass: every record as a verbatim canonical-JSON
OBSERVATION row (censorable for de-identified research use), and curated
row names with numeric values as LOINC-coded MEASUREMENT rows. Ships a
profiler and a seeded synthetic-corpus generator for mapping curation.
"""

from .generate import (
    GeneratorSpec,
    default_name_weights,
    default_spec,
    generate,
    load_spec,
    spec_from_config,
)
from .ingest import (
    FORMAT_DELIMITED,
    FORMAT_JSON_LINES,
    ParseError,
    RecordStream,
    open_stream,
    parse_record,
    write_records,
)
from .mapping import default_mapping, load_mapping, save_mapping
from .model import (
    FlowsheetRecord,
    MappingRule,
    MappingTable,
    MappingValidationError,
    MeasurementRow,
    ObservationRow,
    TransformReport,
)
from .profiling import (
    FrequencyReport,
    context_report,
    count_row_names,
    substring_query,
    top_n,
)
from .report import patient_coverage, per_concept_summary
from .transform import (
    MODE_DEIDENTIFIED,
    MODE_IDENTIFIED,
    Skip,
    TransformConfig,
    censor,
    infer_temperature_unit,
    parse_numeric,
    run_pipeline,
    to_json_observation,
    to_measurement,
)

__version__ = "0.1.0"

__all__ = [
    "FORMAT_DELIMITED",
    "FORMAT_JSON_LINES",
    "FlowsheetRecord",
    "FrequencyReport",
    "GeneratorSpec",
    "MODE_DEIDENTIFIED",
    "MODE_IDENTIFIED",
    "MappingRule",
    "MappingTable",
    "MappingValidationError",
    "MeasurementRow",
    "ObservationRow",
    "ParseError",
    "RecordStream",
    "Skip",
    "TransformConfig",
    "TransformReport",
    "censor",
    "context_report",
    "count_row_names",
    "default_mapping",
    "default_name_weights",
    "default_spec",
    "generate",
    "infer_temperature_unit",
    "load_mapping",
    "load_spec",
    "open_stream",
    "parse_numeric",
    "parse_record",
    "patient_coverage",
    "per_concept_summary",
    "run_pipeline",
    "save_mapping",
    "spec_from_config",
    "substring_query",
    "to_json_observation",
    "to_measurement",
    "top_n",
    "write_records",
]
