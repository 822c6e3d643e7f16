"""Linear and nonlinear 2D elasticity through gradient discretisations.

Each back-end (conforming P1/Q1, Crouzeix-Raviart, stabilized nodal strain,
condensed Hu-Washizu) is a :class:`GradientDiscretisation`: quadrature tables
for the reconstructed function, trace and gradient.  Assembly, solvers and
the quality indicators ``S_D, W_D, C_D, K_D`` only use those tables.
"""

from .assembly import LinearSystem, assemble_linear, assemble_residual, assemble_rhs, assemble_secant
from .discretizations import (
    HuWashizuParams,
    NodalStrainParams,
    assemble_huwashizu_reference,
    assemble_nodal_strain_reference,
    build_conforming,
    build_crouzeix_raviart,
    build_huwashizu,
    build_nodal_strain,
    decompose_Sh,
    make_backend,
)
from .gd import (
    GradientDiscretisation,
    GramSet,
    coercivity_C,
    consistency_S,
    gram_set,
    interpolate_PD,
    korn_K,
    limitconformity_W,
)
from .laws import DamageLaw, HenckyVonMises, LinearLaw, StressLaw, broken_damage_law, check_hypotheses, stress_eval
from .mesh import DualMesh, Mesh, build_dual, generate_unit_square, read_mesh, write_mesh
from .solver import NonlinearResult, SolverError, solve_nonlinear, solve_spd
from .tensor import (
    GeneralTensor4,
    IsoTensor4,
    SymTensor2,
    dev2,
    general_sqrt,
    iso_apply,
    iso_compose,
    iso_sqrt,
)

__version__ = "0.1.0"
