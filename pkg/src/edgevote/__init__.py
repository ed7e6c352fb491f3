"""Edge-cloud inference orchestration with ensemble-voting classifiers."""

__version__ = "0.1.0"
