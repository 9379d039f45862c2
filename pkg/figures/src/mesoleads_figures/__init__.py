"""Batch renderer turning mesoleads scenario CSV files into static figures."""

from .plots import (
    SchemaError,
    budget_stack_series,
    plot_budget,
    plot_infidelity,
    plot_rates,
)

__version__ = "0.1.0"
