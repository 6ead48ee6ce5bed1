"""Offline item-title embedding exporter producing TFRE tables."""

from .errors import ExportError, ManifestError, ModelLoadError, TableFormatError
from .export import VerifyReport, export_table, verify_table
from .manifest import parse_manifest_lines, read_manifest

__version__ = "0.1.0"

__all__ = [
    "ExportError",
    "ManifestError",
    "ModelLoadError",
    "TableFormatError",
    "VerifyReport",
    "export_table",
    "verify_table",
    "parse_manifest_lines",
    "read_manifest",
]
