"""N-connection geometry kernel."""
from .chart import Point, SplitChart, five_d_chart
from .fields import ComponentField, evaluate_fields
from .metric import (DMetric, NConnection, anholonomy, assemble_full_metric, frame_diff,
                     frames, invert, omega)
from .connection import (CanonicalPaths, DConnection, Torsion, as_full, canonical_dconnection,
                         canonical_distortion, canonical_paths, levi_civita, nonmetricity,
                         torsion)
from .curvature import (CURVATURE_BLOCKS, Curvature, curvature, dcurvature_blocks, dricci,
                        einstein, raise_first, ricci, scalar, split_scalar)

__all__ = [
    "Point", "SplitChart", "five_d_chart", "ComponentField", "evaluate_fields", "DMetric",
    "NConnection", "anholonomy", "assemble_full_metric", "frame_diff", "frames", "invert",
    "omega", "CanonicalPaths", "DConnection", "Torsion", "as_full", "canonical_dconnection",
    "canonical_distortion", "canonical_paths", "levi_civita", "nonmetricity", "torsion",
    "CURVATURE_BLOCKS", "Curvature", "curvature", "dcurvature_blocks", "dricci", "einstein",
    "raise_first", "ricci", "scalar", "split_scalar",
]
