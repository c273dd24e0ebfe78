from .harness import (
    AggregateReport,
    ExperimentError,
    ExperimentSpec,
    PointAggregate,
    SnapshotResult,
    VerifyReport,
    aggregate_rows,
    cached_power,
    fmt6,
    read_snapshot_csv,
    run_campaign,
    run_densification_sweep,
    run_element_budget_sweep,
    run_snapshot,
    run_verification,
    suite_instance,
)
from .specfile import dump_spec, load_spec, parse_spec
from .svg import campaign_charts, line_chart

__all__ = [
    "AggregateReport", "ExperimentError", "ExperimentSpec", "PointAggregate", "SnapshotResult",
    "VerifyReport", "aggregate_rows", "cached_power", "fmt6", "read_snapshot_csv", "run_campaign",
    "run_densification_sweep", "run_element_budget_sweep", "run_snapshot", "run_verification",
    "suite_instance", "dump_spec", "load_spec", "parse_spec", "campaign_charts", "line_chart",
]
