"""Large-time heat decay under compactly supported magnetic fields.

Modules:

``fields``      presets, Poincare gauge, flux
``sphere``      nu_B(r) on S^1 and S^2
``radial``      radial grids and one-mode operators
``oscillator``  spectra of the self-similar operators, lambda_B(s)
``heat``        self-similar evolution and decay fits
``hardy``       magnetic Hardy constants and auxiliary inequalities
``config``, ``runner``, ``cli``  experiment harness
"""

from .fields import FieldSpec, MagneticField, make_field, poincare_gauge, total_flux
from .heat import evolve_and_fit, gamma_theory
from .kernels import BACKEND
from .oscillator import lambda_B_of_s, sigma_L_exact
from .sphere import nu_circle_exact, nu_profile

__all__ = [
    "BACKEND",
    "FieldSpec",
    "MagneticField",
    "evolve_and_fit",
    "gamma_theory",
    "lambda_B_of_s",
    "make_field",
    "nu_circle_exact",
    "nu_profile",
    "poincare_gauge",
    "sigma_L_exact",
    "total_flux",
]
__version__ = "0.1.0"
