"""Tweet tone classification and country-level tone analytics."""

from .tones import TONES

__version__ = "0.1.0"

__all__ = ["TONES", "__version__"]
