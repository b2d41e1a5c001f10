"""Text-driven speech style transfer with a spectral state-space recurrence,
cross-attention fusion, and a three-term training objective, at desk scale."""

from ._scan import BACKEND as SCAN_BACKEND

__version__ = "0.1.0"

__all__ = ["SCAN_BACKEND", "__version__"]
