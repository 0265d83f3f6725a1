"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or inconsistent user input (bad dimensions, bad files, bad options)."""


class DegenerateFormError(InputError):
    """The bilinear form is not symmetric or is numerically singular."""


class MonotonicityError(InputError):
    """A point set fails S-monotonicity; ``pair`` holds the offending indices."""

    def __init__(self, pair, value):
        self.pair = tuple(pair)
        self.value = float(value)
        super().__init__(
            f"points {self.pair[0]} and {self.pair[1]} violate monotonicity: "
            f"S(y - z, y - z) = {self.value:.6g}"
        )


class LipschitzError(InputError):
    """Graph samples violate the 1-Lipschitz bound; ``pair`` holds the offending indices."""

    def __init__(self, pair, ratio):
        self.pair = tuple(pair)
        self.ratio = float(ratio)
        super().__init__(
            f"samples {self.pair[0]} and {self.pair[1]} violate the 1-Lipschitz bound "
            f"(|dv| / |du| = {self.ratio:.6g})"
        )
