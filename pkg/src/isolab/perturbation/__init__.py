"""Rayleigh-Hadamard rates, evenness defect, certificate and genericity scan."""
from .certify import Certificate, certify, genericity_scan, rate_estimate, sample_bumps
from .hadamard import (PerturbationSpec, RateCheck, SegmentPair, base_trace, evenness_defect,
                       evenness_error, fd_rate_check, hadamard_rate, pair_rates, perturbed,
                       quadrature_error)
