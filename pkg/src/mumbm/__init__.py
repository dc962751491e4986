"""Multiuser media-based modulation for the massive-MIMO uplink.

Signal sets for MBM and the CM/SM/GSM baselines, a Rayleigh uplink model,
joint ML, sphere, MMSE and sparsity-exploiting detectors, a union bound on
the ML bit error rate and a seeded Monte Carlo BER harness.
"""

from .analysis import f_alpha, pep_from_alpha, pep_unconditional, union_bound_ber
from .channel import NoiseModel, draw_channel, sigma_from_snr, transmit
from .detectors import (
    DETECTORS,
    DetectionResult,
    algorithm1,
    detect,
    extract_uap,
    ml_detect,
    mmse_detect,
    nearest_su_signal,
    sphere_detect,
)
from .errors import BudgetError, ConfigError, EncodingError, MbmError
from .harness import BerRecord, ExperimentSpec, run_point, run_sweep, write_csv
from .modulation import Alphabet, build_alphabet, parse_alphabet
from .recovery import cosamp, omp, subspace_pursuit
from .signalsets import SchemeConfig, SignalSet, build_signal_set, spectral_efficiency

__version__ = "0.1.0"
