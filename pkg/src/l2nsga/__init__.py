"""Multi-objective test case selection with NSGA-II and linkage-learning L2-NSGA."""

__version__ = "0.1.0"
