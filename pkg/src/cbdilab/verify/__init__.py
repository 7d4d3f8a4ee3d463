"""Certification machinery: generator gaps, conditions, moments, martingales, distributions."""
from .bernstein import bernstein_approx, bernstein_eval_direct, bernstein_report
from .conditions import condition_report, weight_audit
from .generator import GAP_COLUMNS, GapReport, decomposition, discrete_generator_exp, generator_gap
from .laplace import LaplaceReport, empirical_laplace, ks_statistic, ks_two_sample, laplace_compare
from .martingale import martingale_residual
from .moments import moment_bound, moment_bound_check
from .oracle import cbi_laplace_oracle, cbi_laplace_riccati, splitting_laplace_cbi

__all__ = [
    "GAP_COLUMNS", "GapReport", "LaplaceReport", "bernstein_approx", "bernstein_eval_direct",
    "bernstein_report", "cbi_laplace_oracle", "cbi_laplace_riccati", "condition_report",
    "decomposition", "discrete_generator_exp", "empirical_laplace", "generator_gap",
    "ks_statistic", "ks_two_sample", "laplace_compare", "martingale_residual", "moment_bound",
    "moment_bound_check", "splitting_laplace_cbi", "weight_audit",
]
