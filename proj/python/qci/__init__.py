"""Quantile confidence intervals driven by the quantile optimality ratio."""

from ._core import (
    QciError,
    ci,
    ci_diff,
    family_catalog,
    fit_gld,
    gld_quantile,
    optimal_bandwidth,
    qdens_direct,
    qor,
    quantile,
    quantile_density,
    sample,
    sample_quantile,
    simulate,
)

__all__ = [
    "QciError",
    "ci",
    "ci_diff",
    "family_catalog",
    "fit_gld",
    "gld_quantile",
    "optimal_bandwidth",
    "qdens_direct",
    "qor",
    "quantile",
    "quantile_density",
    "sample",
    "sample_quantile",
    "simulate",
]
