"""Helmlab: a perceptual color space with an invertible XYZ transform,
a tuned color-difference metric, and design-system utilities on top.

Quick start::

    import helmlab as hl

    p = hl.default_params()
    lab = hl.forward(hl.srgb_to_xyz((0.2, 0.5, 0.8)), p)
    de = hl.delta_e(lab, hl.forward(hl.srgb_to_xyz((0.2, 0.5, 0.7)), p), p.distance)
"""

from .baselines import (WHITE_D65, cie76, cie94, ciede2000, cielab_from_xyz,
                        cmc, linear_srgb_to_xyz, oklab_from_xyz, p3_to_xyz,
                        srgb_decode, srgb_encode, srgb_to_xyz,
                        xyz_to_linear_p3, xyz_to_linear_srgb, xyz_to_p3,
                        xyz_to_srgb)
from .design import (SEMANTIC_STOPS, GamutMapDetails, GamutSpec, PaletteSpec,
                     adapt_mode, contrast_ratio, ensure_contrast, gamut_map,
                     in_gamut, palette, relative_luminance)
from .errors import (ConfigurationError, ContrastError, ConvergenceError,
                     DegenerateInputError, FitError, HelmlabError,
                     LutConstructionError, NumericDomainError, ParseError,
                     ValidationError)
from .evaluation import (BASELINE_METRICS, FULL_BLUE_BAND, SUBSET_TAGS,
                         AblationRow, EvalReport, GenerationMetrics,
                         HueAlignment, JacobianStats, PairDataset, ablation,
                         achromatic_audit, angle_error_deg, bootstrap_ci,
                         default_hue_targets, evaluate, full_blue_mask,
                         gradient_ratio, helmlab_metric, hue_alignment,
                         jacobian_stats, load_dataset, munsell_cv,
                         rotation_audit, round_trip_audit, stress)
from .export import (FORMATS, TokenEntry, TokenSet, export_tokens,
                     import_tokens)
from .fit import (CrossValidation, FitResult, FoldResult, LossConfig,
                  cross_validate, fit, loss, loss_config_from_doc)
from .metric import DistanceParams, delta_e, delta_e_euclidean
from .params import (GROUP_SIZES, PARAMETER_COUNT, PROVENANCE, ChromaParams,
                     HkParams, LightnessParams, ParameterSet, SurroundParams,
                     default_params, dumps_params, is_paper_exact, load_params,
                     loads_params, save_params, vector_names)
from .transform import (FULL_PIPELINE, NeutralCorrectionLut, StageMask,
                        build_neutral_lut, forward, inverse, stage_hue_angle)
from .types import CieLabColor, HelmlabColor, SrgbColor, XyzColor

__version__ = "0.1.0"
