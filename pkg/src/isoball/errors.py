"""Exception types shared across the package."""


class Rejection(ValueError):
    """An operation refused its input for a numerical or domain reason.

    ``operation`` names the rejecting routine so batch front ends can
    report it without parsing the message.
    """

    def __init__(self, operation: str, message: str):
        super().__init__(f"{operation}: {message}")
        self.operation = operation
        self.reason = message
