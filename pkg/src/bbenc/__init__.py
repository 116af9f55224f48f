"""Block encodings, qubitization and time evolution for digitized bosonic lattices."""
from .errors import (BbencError, CompileError, DomainError, ParityError, ResourceError, SolverError,
                     StructureError)
from .lattice import (DiagonalOperator, DigitizationGrid, PauliZPolynomial, apply_function, build_phi,
                      build_pi_diag, difference_operator, pauli_l1_norm, pauli_z_decompose,
                      scale_factor_closed_form, shift_for_qetu, v1_potential, v2_potential)
from .circuit import Circuit, project_block, unitary_of
from .synthesis import GateCounts, diagonal_gates, qft_circuit, transpile
from .lcu import BlockEncoding, UnitaryTerm, conjugate_system, lcu_block_encode, lcu_combine, love_lcu
from .poly import ChebyshevSeries, chebyshev_fit_exact, jacobi_anger
from .qsp import SymmetricPhases, qsp_phases_symmetric, solve_wx_phases
from .gqsp import GqspPhases, gqsp_phases
from .builders import QetuConfig, build_be, build_xi_be, qetu_block_encode, qsvt_block_encode
from .qubitization import WalkOperator, fallback_qubitize, make_walk, reflection_r0, verify_s
from .evolution import (EvolutionReport, HamiltonianSpec, build_hamiltonian_matrix, gqsp_evolve,
                        hamiltonian_be, measure_error, trotter_evolve)

__version__ = "0.1.0"
