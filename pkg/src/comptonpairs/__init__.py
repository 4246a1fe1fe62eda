"""Monte Carlo toolkit for azimuthal Compton-scattering correlations of
annihilation photon pairs.

Simulates a two-arm Compton-polarimeter setup at desk scale, compares
competing joint-state models of the 511 keV pair (entangled, mixed
variants, depolarized mixtures), and extracts count-ratio/modulation
fits and CHSH S-functions from the resulting coincidence histograms.
"""

from .analysis import (AngleHistogram, CorrelationSet, FitDegenerateError,
                       FitResult, UndefinedCorrelationError, build_histogram,
                       build_correlation_set, chsh_report,
                       correlation_coefficient, fit_cosine, fit_s_curve,
                       s_function)
from .apparatus import (ApparatusConfig, EventRecord, classify_event,
                        detector_response, gagg_prescatter, simulate_event)
from .compton import (ELECTRON_MASS_KEV, PhotonState, ScatterSample,
                      analyzing_power, flip_probability, kn_dcs_pol_to_pol,
                      kn_dcs_polarized, kn_dcs_unpolarized, recoil_energy,
                      sample_scatter, scattered_energy)
from .config import RunConfig, parse_config, emit_config, preset_config
from .kernels import BACKEND
from .pairs import (PairKinematics, PairModel, joint_pdf, marginal_modulation,
                    modulation_amplitude, sample_pair)
from .runner import RunSummary, generate_events, run

__version__ = "0.1.0"

__all__ = [
    "ELECTRON_MASS_KEV", "BACKEND", "__version__",
    "PhotonState", "ScatterSample", "scattered_energy", "recoil_energy",
    "kn_dcs_polarized", "kn_dcs_unpolarized", "analyzing_power",
    "kn_dcs_pol_to_pol", "flip_probability", "sample_scatter",
    "PairModel", "PairKinematics", "joint_pdf", "marginal_modulation",
    "modulation_amplitude", "sample_pair",
    "ApparatusConfig", "EventRecord", "simulate_event", "gagg_prescatter",
    "detector_response", "classify_event",
    "AngleHistogram", "FitResult", "CorrelationSet", "build_histogram",
    "fit_cosine", "correlation_coefficient", "s_function",
    "build_correlation_set", "fit_s_curve", "chsh_report",
    "FitDegenerateError", "UndefinedCorrelationError",
    "RunConfig", "parse_config", "emit_config", "preset_config",
    "RunSummary", "run", "generate_events",
]
