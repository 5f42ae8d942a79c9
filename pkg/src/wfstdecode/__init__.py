"""WFST toolkit and personalized CTC beam-search decoder."""

__version__ = "0.1.0"
