"""Shared builders for the test suite."""

import dataclasses

import numpy as np
from scipy import stats

from obvortex.particles import Ensemble


def free_ensemble(kind, pos):
    pos = np.asarray(pos, dtype=float)
    n = len(pos)
    shape = (n, 2) if kind == "Y" else (n,)
    return Ensemble(kind=kind, sites=np.zeros((n, 2), dtype=int), copy=np.zeros(n, dtype=int),
                    pos=pos, alive=np.ones(n, dtype=bool), phi_int=np.zeros(n),
                    W=np.tile(np.eye(2), (n, 1, 1)), force=np.zeros(shape), weight=np.zeros(shape))


def variance_pvalue(x, sigma2):
    """Two-sided chi-square p-value for the sample variance of normal data."""
    n = len(x)
    stat = (n - 1) * np.var(x, ddof=1) / sigma2
    cdf = stats.chi2.cdf(stat, n - 1)
    return 2 * min(cdf, 1 - cdf)


def binomial_pvalue(k, n, p):
    return stats.binomtest(int(k), int(n), p).pvalue
