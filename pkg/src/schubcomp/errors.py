class RationalOverflowError(ArithmeticError):
    """A reduced rational no longer fits in a signed 128-bit numerator/denominator."""


class ResourceCapExceeded(RuntimeError):
    """A frontier or memo structure hit its configured ceiling.

    ``partial`` carries whatever progress report the caller had assembled.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
