"""wkgs: a numerical laboratory for hyperboloidal energies of wave and
Klein-Gordon fields.

Evolves radial (and coarse Cartesian) wave / Klein-Gordon / coupled systems,
evaluates weighted and conformal slice energies by on-slice quadrature,
verifies the closed-form multiplier identities pointwise, and checks the
integral balances, boundedness and pointwise decay claims at desk scale.
"""

ARTIFACT_VERSION = 1
__version__ = "0.1.0"
