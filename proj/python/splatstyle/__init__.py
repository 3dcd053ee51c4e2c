# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the splatstyle Gaussian-splatting stylization core."""

from ._core import (  # noqa: F401
    SplatstyleError,
    Camera,
    Gaussian3D,
    GaussianScene,
    cfsd,
    clip_dc,
    covariance_from_rs,
    csd_score,
    ddim_step,
    extract_features,
    fixture_cameras,
    fixture_scene,
    gaussian_density,
    group_views,
    l1_rgb_loss,
    load_ply,
    nnfm_loss,
    nv_attention,
    render,
    render_backward,
    save_ply,
    stylize_group,
)

__all__ = [
    "SplatstyleError",
    "Camera",
    "Gaussian3D",
    "GaussianScene",
    "cfsd",
    "clip_dc",
    "covariance_from_rs",
    "csd_score",
    "ddim_step",
    "extract_features",
    "fixture_cameras",
    "fixture_scene",
    "gaussian_density",
    "group_views",
    "l1_rgb_loss",
    "load_ply",
    "nnfm_loss",
    "nv_attention",
    "render",
    "render_backward",
    "save_ply",
    "stylize_group",
]
