"""Exception types shared across the pipeline."""


class OocdError(Exception):
    """Base class for all pipeline errors."""


class MalformedRecord(OocdError):
    """A dataset line could not be parsed or failed validation. Aborts the load."""

    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"line {line_number}: {reason}")


class TooFewRecords(OocdError):
    """Not enough labeled records for the requested split or fold count."""


class OutOfRangeScore(OocdError):
    """Coherence (IoU) score outside [0, 1]."""


class EmptyCaption(OocdError):
    """Caption is empty after whitespace trimming."""


class MalformedVector(OocdError):
    """No bracketed list of exactly six integers found in a provider response."""


class ComponentOutOfRange(OocdError):
    """A rating component fell outside [0, 9]. ``index`` is 1-based."""

    def __init__(self, index: int, value: int):
        self.index = index
        self.value = value
        super().__init__(f"component {index} out of range [0, 9]: {value}")


class ProviderUnreachable(OocdError):
    """Chat-completion provider could not be reached or returned garbage transport-level data."""


class RateLimited(OocdError):
    """Provider throttled the client and backoff retries were exhausted."""


class ExtractionFailed(OocdError):
    """Feature extraction gave up on a record under the ``fail`` policy."""

    def __init__(self, record_id: str, last_error: Exception):
        self.record_id = record_id
        self.last_error = last_error
        super().__init__(f"record {record_id!r}: {last_error}")


class SidecarUnreachable(OocdError):
    """Similarity sidecar did not answer."""


class SidecarProtocolError(OocdError):
    """Similarity sidecar answered with an unexpected status or payload."""


class MixedSources(OocdError):
    """Feature rows mix similarity sources within one training run."""


class DegenerateData(OocdError):
    """Training data cannot support the requested fit (single class, no usable stump, ...)."""


class FeatureOrderMismatch(OocdError):
    """Row feature order differs from the order the model was trained with."""


class UnsupportedVersion(OocdError):
    """Model file carries an unknown format version tag."""


class CorruptModel(OocdError):
    """Model file is truncated, unparseable, or structurally invalid."""


class MissingPredictions(OocdError):
    """Some labeled records have no prediction."""

    def __init__(self, missing_ids):
        self.missing_ids = tuple(missing_ids)
        shown = ", ".join(self.missing_ids[:5])
        more = "" if len(self.missing_ids) <= 5 else f" (+{len(self.missing_ids) - 5} more)"
        super().__init__(f"no prediction for labeled records: {shown}{more}")


class ReportInconsistent(OocdError):
    """A reported accuracy does not match recomputation from the prediction dump."""


class ConfigError(OocdError):
    """Invalid or incomplete run configuration."""
