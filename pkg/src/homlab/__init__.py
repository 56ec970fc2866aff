"""Finite-field coding lab: homologous codes for computing over a MAC,
Marton codes for the broadcast channel, their rate regions, and Monte Carlo
checks."""
from .channels import BcSpec, MacSpec, additive_mac, build_bc_joint, build_mac_joint
from .errors import BudgetExceeded, DecodingFailure, HomlabError
from .gf import FieldElement, FieldMatrix, FieldVector, rank
from .homocode import (HomologousCodebook, HomologousParams, encode,
                       generate_homologous_codebook, jt_decode, run_computation_trial,
                       true_combination)
from .martoncode import (MartonCodebook, MartonParams, generate_marton_codebook,
                         marton_decode, marton_encode, run_bc_trial)
from .prob import JointPmf, Pmf
from .regions import RateRegion

__version__ = "0.1.0"
