"""Error taxonomy for the embedding exporter."""


class ExportError(Exception):
    """Base class for all exporter failures."""


class ManifestError(ExportError):
    """Invalid manifest content; carries the offending 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ModelLoadError(ExportError):
    """The text encoder could not be loaded from the given identifier."""


class TableFormatError(ExportError):
    """Malformed embedding-table file; carries the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset
