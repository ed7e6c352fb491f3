# runner is intentionally not imported here: it pulls in the node stack,
# which itself uses records, and the lazy split keeps imports acyclic.
from .presets import (
    LinkSpec,
    NodeSpec,
    ScenarioConfig,
    UnknownPreset,
    preset,
)
from .records import (
    CSV_COLUMNS,
    BenchError,
    TimingRecord,
    WriteFailure,
    format_summary,
    parse_records_csv,
    report,
    summarize,
)

__all__ = [
    "BenchError",
    "CSV_COLUMNS",
    "LinkSpec",
    "NodeSpec",
    "ScenarioConfig",
    "TimingRecord",
    "UnknownPreset",
    "WriteFailure",
    "format_summary",
    "parse_records_csv",
    "preset",
    "report",
    "summarize",
]
