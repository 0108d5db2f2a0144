"""Self-similarity statistics for natural stochastic textures.

Texture/structure separation by Perona-Malik diffusion, Gaussianity and
phase-uniformity tests, scale-wise, patch-wise and GLCM mutual information,
and an exact fractional Brownian motion synthesizer for reference data.
"""

from ._backend import BACKEND
from .composite import Composite, make_composite, make_scene
from .core import (
    DegenerateInputError,
    GrayImage,
    ImageFormatError,
    QuantizedImage,
    load_image,
    quantize,
    save_image,
)
from .diffusion import DiffusionSettings, SeparationResult, pm_diffuse, separate
from .fbm import (
    CholeskyError,
    FbmField,
    FbmParams,
    FbmPath,
    fbm_covariance,
    field_covariance,
    field_to_unit,
    rescale_check,
    sigma_h2,
    synth_field,
    synth_path,
)
from .glcm import Glcm, GlcmOffset, GlcmProfile, glcm, glcm_mi, glcm_mi_profile
from .mi import (
    HistogramSpec,
    MiPatchReport,
    MiScaleReport,
    build_pyramid,
    entropy,
    mi_patches,
    mi_scales,
    mutual_information,
)
from .stats import (
    DegenerateTextureError,
    KsOutcome,
    WaveletDetail,
    gaussianity_report,
    haar_detail,
    ks_test_gaussian,
    ks_test_uniform,
    ks_test_uniform_phase,
    kurtosis,
    phase_spectrum,
    randomize_phase,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
