"""
Contextual encoder, multiview pooling and the controllable patch transform
"""

from typing import Optional

import numpy as np

from ..kb.models import DimensionMismatchError, FeatureBundle
from .models import CvacptParams, EmptyViewSetError, TwoLayerNet, ViewSet


def _vector(x, dim: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (dim,):
        raise DimensionMismatchError(dim, int(x.shape[-1]) if x.ndim else 0, what)
    return x


def contextual_encode(view, text_global, params: CvacptParams) -> np.ndarray:
    """VTEs of one synthetic view: CE over the concatenation [view, text]"""
    view = _vector(view, params.dim, "view")
    text_global = _vector(text_global, params.dim, "text global")
    return params.contextual.forward(np.concatenate([view, text_global]))


def pool_views(views: ViewSet, text_global, params: CvacptParams) -> np.ndarray:
    """Elementwise max of the encoded views"""
    if views.n_views == 0:
        raise EmptyViewSetError()
    if views.dim != params.dim:
        raise DimensionMismatchError(params.dim, views.dim, "view")
    text_global = _vector(text_global, params.dim, "text global")
    stacked = np.concatenate([views.views, np.tile(text_global, (views.n_views, 1))], axis=1)
    return params.contextual.forward(stacked).max(axis=0)


def predict_affine(net: TwoLayerNet, features: np.ndarray, vtes: np.ndarray):
    """(alpha, beta) from [features, VTEs]; features may be a vector or an n_p x d matrix"""
    d = vtes.shape[0]
    if features.ndim == 1:
        out = net.forward(np.concatenate([features, vtes]))
        return out[:d], out[d:]
    conditioned = np.concatenate([features, np.tile(vtes, (features.shape[0], 1))], axis=1)
    out = net.forward(conditioned)
    return out[:, :d], out[:, d:]


def transform(visual: FeatureBundle, vtes, params: CvacptParams,
              blend: Optional[float] = None) -> FeatureBundle:
    """
    Residual affine transform of the global vector and every patch

    Args:
        visual: Mention visual bundle
        vtes: Pooled contextual vector
        params: Network weights
        blend: Override of params.blend (w)

    Returns:
        Bundle of identical shape: x + w * (alpha * x + beta)
    """
    w = params.blend if blend is None else float(blend)
    if not 0.0 <= w <= 1.0:
        raise ValueError("blend must lie in [0, 1]")
    if visual.dim != params.dim:
        raise DimensionMismatchError(params.dim, visual.dim, "visual")
    vtes = _vector(vtes, params.dim, "VTEs")

    if w == 0.0:
        return visual

    g = visual.global_features
    alpha_g, beta_g = predict_affine(params.global_affine, g, vtes)
    new_global = g + w * (alpha_g * g + beta_g)

    local = visual.local_features
    if local.shape[0]:
        alpha_l, beta_l = predict_affine(params.local_affine, local, vtes)
        new_local = local + w * (alpha_l * local + beta_l)
    else:
        new_local = local.copy()

    return FeatureBundle(global_features=new_global, local_features=new_local)


def transform_with_views(visual: FeatureBundle, text_global, views: ViewSet,
                         params: CvacptParams, blend: Optional[float] = None) -> FeatureBundle:
    """Full mention pipeline: pool the views against the text, then transform"""
    return transform(visual, pool_views(views, text_global, params), params, blend=blend)
