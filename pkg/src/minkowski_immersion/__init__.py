"""Isometric immersions into Minkowski space from gridded metrics and hypersurface data."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .lorentz import (  # noqa: F401
    AffineMap,
    LorentzMatrixCert,
    MinkIsometry,
    certify_lorentz,
    is_mink_orthogonal,
    lipschitz_constant,
    lorentz_decompose,
    lorentz_decompose_anchored,
    make_anchor,
    mink_form,
    sym_eigen,
)
from .grid import (  # noqa: F401
    GridChart,
    ResidualReport,
    TensorField,
    christoffel,
    flatness_residual,
    inverse_metric,
    partial_derivative,
    riemann,
)
from .pfaff import (  # noqa: F401
    PfaffCoeffs,
    StaircasePath,
    pfaff_compatibility_residual,
    pfaff_dependence_gap,
    pfaff_integrate,
    pfaff_integrate_path,
    poincare_compatibility_residual,
    poincare_integrate,
)
from .manifold import ImmersionResult, immerse_manifold, isometry_residual  # noqa: F401
from .hypersurface import (  # noqa: F401
    FundamentalForms,
    RiggedImmersionResult,
    RiggedOperators,
    assemble_rigging_coeffs,
    classical_gc_residual,
    fundamental_form_defect,
    generalized_gc_residual,
    immerse_hypersurface_forms,
    immerse_hypersurface_rigged,
    specialize_from_forms,
)
from .alignment import (  # noqa: F401
    AlignmentResult,
    align_hypersurface,
    align_manifold,
    convergence_order,
    sobolev_gap,
    transform_result,
)
