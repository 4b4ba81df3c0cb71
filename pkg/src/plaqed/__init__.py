"""Exact diagonalization of the frustrated spin-1/2 square-lattice model
with six-site plaquette projector interactions."""

__version__ = "0.1.0"

from .lattice import (CLUSTER_SHAPES, Cluster, Momentum, Plaquette,
                      allowed_momenta, build_cluster, cluster_by_name,
                      enumerate_plaquettes)
from .hilbert import (SectorBasis, build_momentum_basis, build_sz_basis,
                      find_representative)
from .hamiltonian import (HamiltonianOperator, ModelParams, build_operator,
                          apply_projector, plaquette_expectation)
