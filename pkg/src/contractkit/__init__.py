"""Contraction coefficients and strong data-processing inequalities for discrete channels."""

from .errors import ContractError
from .foundation import (
    CHI2, HELLINGER, KL, TV, AdmissiblePair, Alphabet, Channel, Dist, Graph, PhiFlags, PhiGenerator,
    alpha, bern, bsc, check_generator, complete_graph, constant_channel, identity_channel, lecam,
    parse_phi, path_graph, phi_eval, uniform, user_generator, validate_admissible,
)
from .divergences import (
    FiniteRandomVariable, JointLaw, conditional_phi_entropy_mean, phi_divergence, phi_entropy,
    phi_information, statistical_information,
)
from .channels import (
    ExchangeablePairLaw, adjoint, admissible, apply, apply_fn, compose, doeblin_alpha,
    doeblin_decomposition, exchangeable_pair, gibbs_kernel, mixture_local, tensor, tensor_dist,
)
from .contraction import (
    EtaReport, ExtremalSolution, balance_coefficient, bsc_transport_bound, comparison_bound, dobrushin,
    eta_bounds, eta_chi2, eta_lc_sup, eta_numeric, extremal_solve, graph_rw_bound, pinsker_constant,
    tensorization_check, transport_bound,
)
from .sobolev import (
    Factorization, ReversiblePair, dirichlet_form, factor_through, herbst, log_sobolev_constant,
    mmse_cov, poincare_constant, sobolev_sdpi_bridge,
)
from .applications import (
    FmmcResult, GraphModel, fmmc_solve, info_contraction_sup, mixing_time_bound, potts_kernels,
    reconstruction_report, sw_hb_compare,
)

__version__ = "0.1.0"
