"""Exception types shared across the package."""


class TaxadownError(Exception):
    """Base class for all taxadown errors."""


class MalformedLabel(TaxadownError):
    """Label string violates the path format or fill rules."""


class SchemaError(TaxadownError):
    """Manifest record is missing a field or carries an invalid value."""


class DuplicateId(TaxadownError):
    """Two detections in one dataset share an id."""


class ZeroVector(TaxadownError):
    """Operation requires a vector with nonzero norm."""


class DimensionMismatch(TaxadownError):
    """Vectors passed together do not share a dimension."""


class EmptyCluster(TaxadownError):
    """Centroid requested for an empty member list."""


class EmptyInput(TaxadownError):
    """Statistic requested over an empty collection."""


class InsufficientClasses(TaxadownError):
    """Triplet sampling needs at least two species groups."""


class InsufficientMembers(TaxadownError):
    """Triplet sampling needs at least one species with two members."""


class NonFiniteGradient(TaxadownError):
    """Training produced NaN/Inf gradients or parameters; aborting."""


class NoEligibleClusters(TaxadownError):
    """No accepted species reached the minimum cluster size."""


class DegenerateCluster(TaxadownError):
    """Cluster has zero mean intra-cluster distance; adaptive score undefined."""


class MissingGroundTruth(TaxadownError):
    """Report requested for re-classified detections without ground truth."""

    def __init__(self, ids):
        self.ids = list(ids)
        super().__init__(f"ground truth missing for: {', '.join(self.ids)}")


class SpecInvalid(TaxadownError):
    """Synthetic dataset spec violates its constraints."""
