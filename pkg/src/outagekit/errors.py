"""Exception types shared across the pipeline."""


class OutageKitError(Exception):
    """Base class for all pipeline errors."""

    code = "internal_error"


# --- gateway ---

class ProviderUnavailable(OutageKitError):
    code = "provider_unavailable"


class SchemaViolation(OutageKitError):
    code = "schema_violation"


class EmptyText(OutageKitError):
    code = "empty_text"


# --- perception ---

class TemporalViolation(OutageKitError):
    code = "temporal_violation"


class UnknownModality(OutageKitError):
    code = "unknown_modality"


class TopologyUnavailable(OutageKitError):
    code = "topology_unavailable"


class WindowOrderViolation(OutageKitError):
    code = "window_order_violation"


# --- memory ---

class DimMismatch(OutageKitError):
    code = "dim_mismatch"


class OrphanSlot(OutageKitError):
    code = "orphan_slot"


class IncidentClosed(OutageKitError):
    code = "incident_closed"


class IncidentStillOpen(OutageKitError):
    code = "incident_still_open"


class NothingToPromote(OutageKitError):
    code = "nothing_to_promote"


class AlreadyPromoted(OutageKitError):
    code = "already_promoted"


class NotFound(OutageKitError):
    code = "not_found"


class EmptyDocument(OutageKitError):
    code = "empty_document"


# --- reasoning ---

class NoEvents(OutageKitError):
    code = "no_events"


class UnknownIncident(OutageKitError):
    code = "unknown_incident"


# --- replay/eval ---

class UnknownProfile(OutageKitError):
    code = "unknown_profile"


class InconsistentInput(OutageKitError):
    code = "inconsistent_input"


class MalformedSignal(OutageKitError):
    code = "malformed_signal"
