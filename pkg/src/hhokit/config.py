"""Engine-wide tunables."""

import os

from .errors import InputError

DEFAULT_JET_CAP = 12
_ENV_VAR = "HHOKIT_JET_CAP"

_jet_cap_override = None


def jet_cap() -> int:
    """Highest jet order a reduction may produce before erroring out."""
    if _jet_cap_override is not None:
        return _jet_cap_override
    raw = os.environ.get(_ENV_VAR)
    if raw is not None:
        try:
            value = int(raw)
        except ValueError:
            raise InputError(f"{_ENV_VAR} must be an integer, got {raw!r}")
        if value < 1:
            raise InputError(f"{_ENV_VAR} must be positive, got {value}")
        return value
    return DEFAULT_JET_CAP


def set_jet_cap(value):
    """Override the cap in-process (None restores env/default behaviour)."""
    global _jet_cap_override
    if value is not None and value < 1:
        raise ValueError("jet cap must be positive")
    _jet_cap_override = value
