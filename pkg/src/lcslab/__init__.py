"""Numerical checks for twisted Hamiltonian torus actions on lcs manifolds."""

from .errors import (CapabilityError, DomainError, LcsLabError, PreconditionError,
                     StructuralError, UsageError)
from .forms import (Chart, KForm, Point, ScalarField, VectorField, eval_form, exterior_d,
                    interior, lie_derivative, twisted_d, wedge)
from .lcs import (AffinePlus, LcsStructure, ResidualReport, aff_commutator, aff_compose,
                  check_lcs, moment_from_potential, monodromy_classify, s_lee_field,
                  special_residual, twisted_ham_residual, twisted_poisson)
from .models import (LcsModel, build_diagonal_hopf_conformal, build_istrati,
                     build_vaisman_deformation, build_weighted_hopf, covering_maps,
                     sample_points)
from .moment import (MomentSampleSet, descent_invariance_check, lee_type_witness,
                     muss_scaling_check, psi_rescale, sample_moment_image, symplectic_moment,
                     twisted_moment, vaisman_contact_pair)
from .convexity import (ConeReport, ConvexityReport, Polytope, cone_check, convex_hull,
                        convexity_verdict, extremal_set_C, fiber_connectivity,
                        hyperplane_witness, monotone_straight)
from .toric import (ActionAngleModel, MappingTorusData, hessian_homogeneity,
                    holomorphy_residual, mapping_torus_compare, omega_J_blocks)

__version__ = "0.1.0"
