"""Bayesian model-averaged meta-analysis (Python bindings)."""

import json

from ._core import (
    BmaMetaError,
    effect_from_table,
    fit_prior,
    lookup,
    normalize_prior,
    prior_cdf,
    prior_quantile,
)
from . import _core

__all__ = [
    "BmaMetaError",
    "analyze_tables",
    "analyze_estimates",
    "effect_from_table",
    "fit_prior",
    "lookup",
    "normalize_prior",
    "prior_cdf",
    "prior_quantile",
    "registry",
]


def registry(measure=None):
    return json.loads(_core.registry_json(measure))


def analyze_tables(tables, prior_mu, prior_tau, output_scale="log", ci=0.95, beta_bound=10.0):
    """Binomial-normal analysis of log OR from (a, b, c, d) rows."""
    return json.loads(
        _core.analyze_tables_json(
            [tuple(int(v) for v in t) for t in tables], prior_mu, prior_tau, output_scale, ci, beta_bound
        )
    )


def analyze_estimates(measure, y, se, prior_mu, prior_tau, output_scale="log", ci=0.95):
    """Normal-normal analysis from estimates and standard errors."""
    return json.loads(
        _core.analyze_estimates_json(measure, list(y), list(se), prior_mu, prior_tau, output_scale, ci)
    )
