"""Virtual element eigenvalue problems on polygonal meshes."""

from ._vemeig import (
    ConfigError,
    Mesh,
    MeshError,
    NumericalError,
    Pencil,
    SpectralResult,
    SyntheticPencil,
    assemble,
    build_synthetic_pencil,
    exact_square_spectrum,
    kernel_dim,
    make_mesh,
    nominal_h,
    predict_families,
    solve,
    solve_dense,
)

__all__ = [
    "ConfigError",
    "Mesh",
    "MeshError",
    "NumericalError",
    "Pencil",
    "SpectralResult",
    "SyntheticPencil",
    "assemble",
    "build_synthetic_pencil",
    "exact_square_spectrum",
    "kernel_dim",
    "make_mesh",
    "nominal_h",
    "predict_families",
    "solve",
    "solve_dense",
]
