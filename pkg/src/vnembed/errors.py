"""Exception types shared across the package."""


class VNEError(Exception):
    """Base class for all embedding errors."""


class InvalidPathError(VNEError, ValueError):
    pass


class IncompletePlanError(VNEError, ValueError):
    pass


class AllocationError(VNEError):
    """Raised when allocate/release cannot be applied to a substrate."""


class GenerationError(VNEError):
    pass


class ChaosStateError(VNEError, ValueError):
    pass


class NodeMappingError(VNEError):
    """No feasible initial population could be built for a request."""


class LinkMappingError(VNEError):
    """A virtual link could not be routed.

    ``partial`` holds the paths that were routed before the failure so a
    remapping attempt can reuse them.
    """

    def __init__(self, message, vlink=None, partial=None):
        super().__init__(message)
        self.vlink = vlink
        self.partial = dict(partial or {})
