"""discodrive: disfluency-enriched driver/car-AI dialog synthesis, tagging,
and evaluation toolkit."""

__version__ = "0.1.0"
