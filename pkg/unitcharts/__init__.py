"""Control charts for processes bounded in the unit interval."""

__version__ = "0.1.0"
