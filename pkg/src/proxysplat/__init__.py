"""Hybrid proxy-mesh + gaussian-splat modeling of desk-scale urban scenes."""

from .core import (
    CameraView,
    Gaussian3D,
    GaussianSet,
    Point3,
    Raster,
    project_point,
    psnr,
    quaternion_to_covariance,
)

__all__ = [
    "CameraView",
    "Gaussian3D",
    "GaussianSet",
    "Point3",
    "Raster",
    "project_point",
    "psnr",
    "quaternion_to_covariance",
]
