"""Semisprays, nonlinear connections and mechanical systems on tangent, cotangent and higher-order bundles."""

__version__ = "0.1.0"

from .errors import (ConfigError, ConvergenceError, DomainViolation, IrregularPoint, NullSection,
                     NumericalError, OrderOverflow, ParseError, SingularMatrix, SprayforgeError,
                     UnboundParameter, UnknownVariable)
from .expr import VarLayout, evaluate, parse_expr
from .jet import Jet, eval_jet, eval_jets
from .tangent import TangentSpaceDef, canonical_semispray, connection_bundle, nonlinear_connection
from .hamilton import CotangentSpaceDef, cotangent_bundle, poisson
from .legendre import LegendrePair, dual_hamiltonian, legendre_forward, legendre_inverse
from .mech import ExternalForce, MechanicalSystem, evolution_rhs
from .higher import HigherOrderSpace, HigherOrderSystem, HigherPoint
from .integrate import IntegratorConfig, Trajectory, integrate
from .scenarios import ScenarioConfig, build, load_config, load_preset, preset_names
from .verify import run_verify
