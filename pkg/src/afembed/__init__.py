"""Decision procedures and numerical lifting for embeddings of AF algebras,
CP maps, ultraproduct simulation and quasidiagonality certificates."""
from .errors import *  # noqa: F401,F403
from .algebra import (BlockMatrix, DimensionVector, FdAlgebra, MappingMatrix, MappingReport,
                      RealizedMorphism, as_algebra, as_dims, compose, inner_conjugacy,
                      mapping_matrix_of, matrix_unit, matrix_unit_defect, matrix_units,
                      random_block_unitary, random_unitary, realize, unit_indices,
                      validate_mapping)
from .divisibility import DivisibilityWitness, divides, enumerate_witnesses, iter_solutions
from .bratteli import (BratteliChain, ChainReport, EmbeddingVerdict, MatrixSequence,
                       classify_morphisms, decide_embedding, make_compatible, uhf_chain,
                       uhf_check, validate_chain, validate_matrix_sequence)
from .matnum import (AlmostProjection, SpectralDecomposition, correct_near_contraction,
                     correct_projection, func_calc, h_function, lift_matrix_units,
                     lift_partial_isometry, projection_defect, spectral_decomposition)
from .cpmaps import (CpMap, CpVerdict, FactorizationReport, StinespringData, choi_of,
                     cp_near_contraction_fix, cp_norm, from_kraus, is_cp,
                     matricial_factor_check, repair_sequence, stinespring, unitalize)
from .ultrasim import (IndexedFamily, UltraElement, conjugacy_merge, lift_units_along,
                       pi_equal, quotient_algebra_check, tail_limit, up_norm)
from .qdcert import (QdCertificate, certify, proper_isometry_obstruction, rfd_sum,
                     search_subspace, truncated_shift)

__version__ = "0.1.0"
