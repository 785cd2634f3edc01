"""Model representation, formulation builders, cuts and LP-format export."""

from .builders import (DISTANCES, FORMULATIONS, GRAPHS, InfeasibleModelError, MeanLayout,
                       attach_implicit, attach_linear_distances, attach_perspective_oa,
                       attach_quadratic_distances, build_arc_model, build_model, build_vertex_model,
                       mean_length_bound, parse_formulation)
from .cuts import (ImplicitCut, big_m, implicit_cut, implicit_row, perspective_tangent, quad_tangent,
                   separate_oa_cut)
from .ir import BINARY, CONTINUOUS, Affine, LinearRow, Model, ModelError, PerspectiveRow, QuadraticRow
from .lpformat import ExportError, LPParseError, ParsedLP, export_lp, parse_lp
