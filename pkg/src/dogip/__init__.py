"""Matrix-free finite elements on simplex meshes via double-grid integration.

The Galerkin matrix of the weighted projection ``int m u v`` or of the
elliptic form ``int M grad u . grad v`` is applied as ``B^T A_T B`` element by
element, where ``B`` is one reference interpolation table and ``A_T`` a
(block-)diagonal factor per element. A conventional CSR assembly is kept as
the reference path.
"""
from .assembly import (CsrMatrix, assemble_elliptic_matrix, assemble_rhs, assemble_wp_matrix,
                       csr_matvec)
from .coefficients import CoefficientField, matrix_field, scalar_field
from .dofmap import DofMap, build_continuous_dofmap, build_discontinuous_dofmap
from .mesh import AffineMap, Mesh, build_structured_mesh
from .metrics import EfficiencyReport, build_report, nnz_pm1, nnz_with_threshold
from .operators import (DogipEllipticOperator, DogipWpGlobalOperator, DogipWpOperator,
                        build_elliptic_dogip, build_wp_dogip, build_wp_dogip_global, dogip_matvec)
from .quadrature import QuadratureRule, grundmann_moller, integrate_on_element
from .reference import (InterpTableElliptic, InterpTableWP, ReferenceBasis, build_interp_elliptic,
                        build_interp_wp, build_lagrange_basis, eval_basis, eval_basis_grad,
                        reference_nodes)
from .solver import BcSpec, LinearOperator, apply_dirichlet, cg_solve

__version__ = "0.1.0"
