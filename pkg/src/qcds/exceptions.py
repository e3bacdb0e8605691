"""Warning and error types shared across the package."""


class TruncationWarning(UserWarning):
    """Coherent-state population is likely leaking past the Fock cutoff."""


class ConvergenceWarning(UserWarning):
    """An optimisation finished without reaching its target."""


class DegenerateBranch(UserWarning):
    """A qubit branch carries (almost) no population; its frame was set to 0."""


class ConfigError(ValueError):
    """Malformed or unsupported configuration."""
