"""Variable-reduction-ratio knee: takeoff simulation and mechanism search."""

__version__ = "0.1.0"
