from ._backend import BACKEND
from .dynamics import (Ray, Trajectory, BounceRecord, DichotomyReport, step, trace, caustic_parameter,
                       classify_mu, dichotomy_check, geom_array, random_rays)
from .orbits import (PeriodicOrbit, LengthSpectrum, MatchReport, find_orbits, length_spectrum,
                     compare_spectra)
