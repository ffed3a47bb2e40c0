"""Secure finite-blocklength BLER of a FAS-RIS NOMA downlink with hardware impairments."""

from .analytic import AverageBler, average_secure_bler, hi_ceiling
from .bler import secure_bler_instantaneous, sinr_set
from .montecarlo import ks_clt, mc_average_secure_bler
from .params import ParameterError, SystemParams, default_params

__version__ = "0.1.0"

__all__ = [
    "AverageBler",
    "ParameterError",
    "SystemParams",
    "__version__",
    "average_secure_bler",
    "default_params",
    "hi_ceiling",
    "ks_clt",
    "mc_average_secure_bler",
    "secure_bler_instantaneous",
    "sinr_set",
]
