"""Exception types shared across the package."""


class FlowsentryError(Exception):
    """Base class for every package-specific error."""


class IngestError(FlowsentryError):
    """CSV ingestion failed: missing file, bad header, or zero clean rows."""


class SplitError(FlowsentryError):
    """Dataset split cannot satisfy its contract."""


class LabelError(FlowsentryError):
    """A label name is unknown to the codec or dataset."""


class TrainingError(FlowsentryError):
    """Training preconditions violated (empty data, class missing from fit part)."""


class BundleError(FlowsentryError):
    """Base class for persisted-pipeline problems."""


class BundleFormatError(BundleError):
    """The bundle file is not parseable as a bundle document."""


class BundleVersionError(BundleError):
    """The bundle declares a format version this build does not support."""


class BundleConsistencyError(BundleError):
    """The bundle parsed but its parts disagree (shapes, classes, threshold)."""


class QuarantineError(FlowsentryError):
    """Quarantine lookup or storage failure."""


class QuarantineStateError(QuarantineError):
    """Illegal status transition on a quarantine item."""


class RetrainError(FlowsentryError):
    """Retraining could not start or complete."""


class CliError(FlowsentryError):
    """Command-line arguments or environment overrides are unusable."""
