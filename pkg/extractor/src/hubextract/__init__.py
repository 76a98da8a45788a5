"""Feature extraction adapter feeding the disco-select scoring toolkit."""

from .datasets import BoxAnnotation, Dataset, Sample, load_dataset
from .extract import ExtractionJob, ExtractionResult, extract, extract_batch
from .models import ModelResolutionError, resolve

__version__ = "0.1.0"

__all__ = [
    "BoxAnnotation",
    "Dataset",
    "ExtractionJob",
    "ExtractionResult",
    "ModelResolutionError",
    "Sample",
    "extract",
    "extract_batch",
    "load_dataset",
    "resolve",
]
