"""Panel estimators, specification diagnostics and one-step difference GMM."""

from ._core import (
    DgpConfig,
    NumericalError,
    Panel,
    ParseError,
    ValidationError,
    cdf,
    estimate,
    instrument_count,
    monte_carlo,
    parse_instruments,
    quantile,
    read_panel_csv,
    run_pipeline,
    sf,
    simulate,
    test,
    two_sided_normal_p,
    unit_root,
    write_panel_csv,
)

__all__ = [
    "DgpConfig",
    "NumericalError",
    "Panel",
    "ParseError",
    "ValidationError",
    "cdf",
    "estimate",
    "instrument_count",
    "monte_carlo",
    "parse_instruments",
    "quantile",
    "read_panel_csv",
    "run_pipeline",
    "sf",
    "simulate",
    "test",
    "two_sided_normal_p",
    "unit_root",
    "write_panel_csv",
]
