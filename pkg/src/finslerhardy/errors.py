"""Exception types shared across the package."""


class ConstructionError(ValueError):
    """Invalid parameters for a norm family or derived object (non-SPD matrix, s < 2, ...)."""


class DomainError(ValueError):
    """Evaluation outside the mathematical domain (gradient at 0, point past a cutoff radius, ...)."""


class UnsupportedKindError(ValueError):
    """Operation not defined for this norm-family kind (e.g. dual norm of an x-dependent family)."""


class BranchError(ValueError):
    """Wrong construction branch for the given (p, n, sigma) or a violated branch constraint."""


class PoisonedIntegrandError(ValueError):
    """Integrand returned NaN/inf at a quadrature node.  Carries the offending node."""

    def __init__(self, node, value):
        self.node = node
        self.value = value
        super().__init__(f"integrand is {value!r} at node {node!r}")


class MarginError(ValueError):
    """Support of a test function touches the domain boundary."""


class RangeError(ValueError):
    """Field range too narrow for the requested cutoff family."""


class SolverError(RuntimeError):
    """Nonlinear solver failed to converge.  Carries the last residual."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message if residual is None else f"{message} (last residual {residual:.3e})")
