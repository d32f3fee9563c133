"""Generalized probabilistic theories: quotients, transition matrices, frames and noncontextuality tests."""

from .embed.cones import ConeDescription, dual_cone
from .embed.embedding import (
    EmbeddingCertificate, EmbedResult, FarkasCertificate, cardinality_check, embed_test, reduce_certificate,
    verify_certificate,
)
from .errors import (
    CompositeNotRegistered, DimensionMismatch, EmbeddingError, FrameError, GptError, QuotientError,
    SingularMatrixError, SystemMismatch,
)
from .frames import (
    FrameEntry, FrameModel, build_frame, exactness_check, frame_model, positivity_report, quasi_to_ontological,
    represent, verify_structure,
)
from .gptcore import (
    GptEffect, GptFragment, GptState, GptTransformation, SystemSpec, classical_system, compose_par, compose_seq,
    composite, evaluate, validate_fragment,
)
from .quotient import StatsTable, nc_model_from_gpt_model, quotient
from .tomo import identity_decomposition_check, tomographic_locality_check, transition_matrix

__version__ = "0.1.0"
