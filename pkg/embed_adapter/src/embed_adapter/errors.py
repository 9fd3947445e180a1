"""Error hierarchy; every exception carries a stable ``code`` string."""


class AdapterError(Exception):
    code = "ADAPTER_ERROR"


class MalformedManifestError(AdapterError):
    """Manifest file unparsable or violating an invariant (duplicate keys,
    unknown modality, missing field)."""
    code = "MALFORMED_MANIFEST"


class EncoderUnavailableError(AdapterError):
    code = "ENCODER_UNAVAILABLE"


class UnreadableSourceError(AdapterError):
    code = "UNREADABLE_SOURCE"


class IoFailureError(AdapterError):
    code = "IO_FAILURE"
