"""OCR noise simulation, statistical word alignment and AER evaluation."""

__version__ = "0.1.0"
