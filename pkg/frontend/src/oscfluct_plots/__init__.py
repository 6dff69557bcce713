"""Static figures from oscfluct batch outputs.

Read-only over the documented CSV/JSON schemas; all statistics are computed
upstream, this package only draws.
"""

__version__ = "0.1.0"
