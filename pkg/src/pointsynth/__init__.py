"""Synthesis and analysis of stationary point patterns on a periodic window.

The pipeline: rasterize a point pattern into a smooth image (rasterize),
expand it over a steerable wavelet bank (wavelets), reduce to a covariance
descriptor (descriptors), measure the squared descriptor mismatch against
an observation (energy), and move points downhill with a multiscale
particle descent or a random-search baseline (optimizers). Generators
provide model families to observe; evaluation scores the results.
"""

from .config import RunConfig, load_config, resolved_toml, to_synthesis_config
from .descriptors import (
    EPS_PH,
    DescriptorVector,
    GammaEntry,
    GammaH,
    build_gamma_h,
    conjugate_equivalent,
    nnd_descriptor,
    phase_harmonic,
    phase_harmonic_vjp,
    transform_entry,
    wph_descriptor,
    wph_descriptor_adjoint,
    write_descriptor_csv,
)
from .energy import (
    EnergyContext,
    EnergyReport,
    energy_and_gradient,
    energy_only,
    gradient_check,
    make_energy_context,
    nnd_energy_fn,
    relative_energy,
    wph_energy_fn,
)
from .generators import (
    GENERATOR_KINDS,
    GeneratorSpec,
    IntensityRaster,
    load_intensity,
    multiscale_intensity,
    sample_binomial,
    sample_cox_circles,
    sample_cox_voronoi,
    sample_matern2_hardcore,
    sample_matern_cluster,
    sample_poisson,
    sample_poisson_intensity,
    save_intensity,
)
from .geometry import (
    PatternFormatError,
    PointPattern,
    RigidCircularTransform,
    Window,
    apply_transform,
    random_thin,
    read_pattern,
    square_symmetries,
    torus_diff,
    torus_distance_matrix,
    wrap_coords,
    write_pattern,
)
from .optimizers import (
    MultiscaleSchedule,
    SynthesisConfig,
    Trace,
    TraceRow,
    final_blur,
    gd_synthesize,
    multiscale_schedule,
    rs_synthesize,
    write_trace_csv,
)
from .rasterize import (
    PixelImage,
    SplatConfig,
    read_raster,
    splat,
    splat_adjoint,
    write_raster,
)
from .wavelets import (
    LOWPASS,
    WaveletBank,
    build_bank,
    default_xi0,
    dump_filters,
    wavelet_adjoint,
    wavelet_transform,
)
from . import evaluation

__version__ = "0.1.0"
