"""ansambl: a sixteen-voice interactive vocal ensemble engine."""

__version__ = "0.1.0"
