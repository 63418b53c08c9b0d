"""Click statistics and photon-number retrodiction for multiplexed on/off detectors."""

__version__ = "0.1.0"

from .clickmodel import (
    ClickPMF,
    DetectorBank,
    all_detect_probability,
    epsilon_from_rate,
    likelihood,
    pmf_ideal,
    pmf_lossy,
    pmf_noisy,
)
from .combinatorics import binom_pmf, falling_factorial, log_binom_pmf, stirling2, StirlingTable
from .fockoptics import (
    JointPosterior,
    JointPrior,
    TwoModeAmplitudes,
    beamsplitter_fock,
    joint_evidence,
    joint_retrodict,
    noon_joint_prior,
)
from .priors import Custom, PhotonPrior, Poisson, SqueezedGain, Thermal, parse_prior, prior_pmf, truncation_bound
from .retrodict import (
    ImpossibleObservation,
    Posterior,
    posterior_summary,
    retrodict,
    retrodict_poisson_ideal,
    retrodict_thermal_ideal,
)
from .simulate import EmpiricalPMF, TrialConfig, estimate_noon, estimate_pmf, simulate_noon_window, simulate_window
