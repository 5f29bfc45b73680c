"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: data errors exit 2, model/training/
bundle errors exit 3.
"""


class KospredError(Exception):
    """Base class for all package errors."""


class DataError(KospredError):
    """Problems with input data: ingestion, cleansing, splitting."""


class CsvSchemaError(DataError):
    """The CSV header is missing a required column."""


class EmptyDatasetError(DataError):
    """Cleansing or filtering left no usable records."""


class SplitError(DataError):
    """The requested split leaves one side empty."""


class ModelError(KospredError):
    """Problems inside the model, training, or search machinery."""


class ShapeError(ModelError):
    """A tensor does not have the dimensions an operation requires."""


class EmptyBatchError(ModelError):
    """Loss or evaluation was asked to run on zero rows."""


class TrainingDivergedError(ModelError):
    """A non-finite loss appeared during training."""

    def __init__(self, epoch: int, learning_rate: float):
        self.epoch = epoch
        self.learning_rate = learning_rate
        super().__init__(
            f"training diverged at epoch {epoch} (learning rate {learning_rate})"
        )


class MorphismError(ModelError):
    """A structure transformation that cannot preserve the function."""


class SearchFailedError(ModelError):
    """Every architecture-search trial diverged."""

    def __init__(self, message: str, trials):
        self.trials = trials
        super().__init__(message)


class BundleError(KospredError):
    """Problems with the .kosm deployment bundle."""


class BundleFormatError(BundleError):
    """The byte stream is not a .kosm file at all."""


class BundleVersionError(BundleError):
    """The .kosm version is not supported by this loader."""


class BundleCorruptError(BundleError):
    """A .kosm section is truncated or internally inconsistent."""
