"""Exception taxonomy shared by the library and the CLI.

The CLI maps these onto distinct exit codes: InputError (and its
ConfigError subclass) -> 2, ResourceError -> 3, anything else -> 4.
"""


class InputError(ValueError):
    """Caller supplied an argument that violates a documented precondition."""


class ConfigError(InputError):
    """A problem configuration file failed to parse or validate.

    Messages carry the offending field path, e.g. ``driver_rates[3].to_level``.
    """


class ResourceError(RuntimeError):
    """A computation would exceed a configured resource cap."""


class ConsistencyError(RuntimeError):
    """Internal invariant broken, e.g. a trajectory transition that matches
    no transition family of the model it was sampled from."""
