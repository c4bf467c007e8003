"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    pass


class NumericalDomainError(ArithmeticError):
    """A quantity that must be finite was not (e.g. an integrand at a node)."""


class DegeneratePointError(ArithmeticError):
    """The evaluation matrix S(x) is rank deficient at a point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class DegenerationError(ArithmeticError):
    """The Gram matrix has an eigenvalue below the degeneration floor."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class ResourceError(RuntimeError):
    pass
