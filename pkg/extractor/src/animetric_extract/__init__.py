"""Video-to-artifact extractors feeding the animetric evaluation engine."""

from .abtf import write_abtf
from .jobs import ExtractionJob, run_extraction
from .video import DecodeError, load_video, sample_indices, uniform_indices

__version__ = "0.1.0"
