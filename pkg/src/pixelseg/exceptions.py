"""Exception types raised across the package."""


class PixelsegError(Exception):
    """Base class for all errors raised by pixelseg."""


class FtzError(PixelsegError):
    """Base class for feature-tensor file problems."""


class BadMagic(FtzError):
    """File does not start with the FTZ magic bytes."""


class HeaderMismatch(FtzError):
    """FTZ header is malformed or inconsistent with the payload."""


class NonFinite(PixelsegError):
    """Tensor data contains NaN or infinity."""


class IoFailure(PixelsegError):
    """Reading or writing a file failed at the OS level."""


class UnsupportedPng(PixelsegError):
    """Label image is not an 8-bit single-channel PNG."""


class LabelOutOfRange(PixelsegError):
    """Label value outside the supported [0, 254] range."""


class EmptyRecipe(PixelsegError):
    """Feature recipe has no source tensors."""


class DegenerateInput(PixelsegError):
    """Too few rows to fit a covariance model."""


class KTooLarge(PixelsegError):
    """Requested more principal components than the model holds."""


class KExceedsPoints(PixelsegError):
    """Requested more clusters than there are points."""


class TooManyPoints(PixelsegError):
    """Input exceeds the agglomerative clustering size cap."""


class SingleCluster(PixelsegError):
    """Silhouette is undefined with fewer than two clusters."""


class DimMismatch(PixelsegError):
    """Predicted and ground-truth label maps have different shapes."""


class AllRecipesFailed(PixelsegError):
    """No recipe produced a usable representation."""


class AllCandidatesErrored(PixelsegError):
    """No clustering candidate produced a scoreable result."""
