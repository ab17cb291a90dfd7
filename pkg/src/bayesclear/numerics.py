"""Numerically stable standard-normal helpers used throughout the package.

Belief updates and price likelihoods routinely evaluate Gaussian tail
quantities at arguments far below -8, where the density and CDF both
underflow in double precision. Everything here goes through
``scipy.special.log_ndtr``, which stays accurate over the whole real line.
"""

import numpy as np
from scipy import special

_LOG_SQRT_2PI = 0.5 * float(np.log(2.0 * np.pi))


def norm_logpdf(z):
    z = np.asarray(z, dtype=float)
    return -0.5 * z * z - _LOG_SQRT_2PI


def norm_pdf(z):
    return np.exp(norm_logpdf(z))


def norm_cdf(z):
    return special.ndtr(z)


def norm_logcdf(z):
    return special.log_ndtr(z)


def inverse_mills(z):
    """N(z) / Phi(z), evaluated as exp(logpdf - logcdf).

    The ratio stays finite (~ -z) for large negative z even though both
    factors underflow separately; never divide the raw pdf by the raw CDF.
    """
    z = np.asarray(z, dtype=float)
    return np.exp(norm_logpdf(z) - special.log_ndtr(z))
