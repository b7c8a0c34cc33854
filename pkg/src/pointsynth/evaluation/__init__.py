"""Pattern evaluation: topological summaries, spectra, and comparison aids."""

from .homology import (
    PersistenceDiagram,
    mean_cross_distance,
    pd_wasserstein,
    persistence,
    write_pd_csv,
)
from .summaries import (
    RadialSpectrum,
    bootstrap_ci,
    euler_characteristic,
    mds_embed,
    radial_spectrum,
    scdf,
    write_dist_matrix_csv,
    write_euler_csv,
    write_mds_csv,
    write_scdf_csv,
    write_spectrum_csv,
)

__all__ = [
    "PersistenceDiagram",
    "persistence",
    "pd_wasserstein",
    "mean_cross_distance",
    "write_pd_csv",
    "RadialSpectrum",
    "radial_spectrum",
    "scdf",
    "euler_characteristic",
    "bootstrap_ci",
    "mds_embed",
    "write_spectrum_csv",
    "write_scdf_csv",
    "write_euler_csv",
    "write_dist_matrix_csv",
    "write_mds_csv",
]
