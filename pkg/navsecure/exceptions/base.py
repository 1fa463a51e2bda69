class NavSecureError(Exception):
    """
    Base class for every error raised deliberately by this package.
    """

    def __init__(self, message="Something went wrong inside navsecure!"):
        self.message = message
        super().__init__(self.message)
