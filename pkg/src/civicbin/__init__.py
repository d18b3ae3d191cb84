"""civicbin: a deterministic smart-waste telemetry simulator and central operations service."""

__version__ = "0.1.0"
