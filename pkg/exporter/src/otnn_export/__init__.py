"""Text-to-embedding exporter for the otnn binary interchange format."""

__version__ = "0.1.0"

from .encoders import DEFAULT_MODEL, ExportError, HashingEncoder, SbertEncoder, resolve_encoder
from .export import AdapterConfig, TextRecord, export_embeddings, read_text_records
from .preprocess import preprocess

__all__ = [
    "__version__",
    "DEFAULT_MODEL",
    "ExportError",
    "HashingEncoder",
    "SbertEncoder",
    "resolve_encoder",
    "AdapterConfig",
    "TextRecord",
    "export_embeddings",
    "read_text_records",
    "preprocess",
]
