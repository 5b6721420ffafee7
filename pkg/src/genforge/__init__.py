"""Generative inverse design: a conditional VAE that proposes portfolios of
designs for a target performance, compared against a surrogate-based
optimisation baseline."""

from .campaign import CampaignConfig, load_config, run_campaign
from .cvae import CvaeConfig, CvaeModel, build_model, generate, train
from .data import Dataset, Standardizer, compute_bounds, fit_standardizer, load_dataset, percentile
from .metrics import build_histogram, check_validity, diversity, performance_stats
from .sbo import SboConfig, baseline_predicted_score, run_sbo
from .standin import make_standin_dataset
from .surrogate import fit_linear, predict, train_mlp_surrogate

__version__ = "0.1.0"
