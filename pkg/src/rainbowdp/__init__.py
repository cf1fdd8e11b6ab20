"""Rainbow distinguished-point time-memory tradeoff: tables, search, theory and experiments."""

from .core import ConfigError, CounterSet, SpaceParams, evaluate, is_dp, reduce, step
from .offline import build_table, build_tables
from .online import SearchOutcome, batch_search, search
from .storage import PrecompTable, TableFormatError, load, lookup, save
from .theory import TheoryInputs

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "CounterSet", "SpaceParams", "evaluate", "is_dp", "reduce", "step",
    "build_table", "build_tables", "SearchOutcome", "batch_search", "search",
    "PrecompTable", "TableFormatError", "load", "lookup", "save", "TheoryInputs",
]
