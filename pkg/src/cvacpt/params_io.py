"""
Initialization and persistence of transform parameters
A parameter directory holds manifest.json plus one EMB1 file per matrix
"""

import json
from pathlib import Path
from typing import Dict, Union

import numpy as np

from ..config.logger import get_logger
from ..storage.embeddings import encode_matrix, load_embeddings
from .models import PARAM_SHAPES, CvacptParams, ShapeMismatchError, TwoLayerNet

logger = get_logger()

PathLike = Union[str, Path]

MANIFEST_NAME = "manifest.json"
PARAMS_FORMAT = "melmine-cvacpt/1"


def params_from_matrices(matrices: Dict[str, np.ndarray], dim: int, blend: float) -> CvacptParams:
    """Assemble params from named matrices (biases given as 1 x n)"""
    def net(prefix: str) -> TwoLayerNet:
        return TwoLayerNet(
            w1=np.asarray(matrices[f"{prefix}_w1"], dtype=np.float32),
            b1=np.asarray(matrices[f"{prefix}_b1"], dtype=np.float32).reshape(-1),
            w2=np.asarray(matrices[f"{prefix}_w2"], dtype=np.float32),
            b2=np.asarray(matrices[f"{prefix}_b2"], dtype=np.float32).reshape(-1),
        )

    return CvacptParams(dim=dim, blend=blend, contextual=net("ce"),
                        global_affine=net("ag"), local_affine=net("al"))


def init_params(dim: int, seed: int, blend: float = 0.5) -> CvacptParams:
    """
    Seeded uniform initialization

    Every weight and bias of a layer is drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
    where fan_in is the layer's input width. Values are stored as float32.
    """
    rng = np.random.default_rng(seed)
    matrices = {}
    for name, shape_of in PARAM_SHAPES.items():
        prefix, layer = name.split("_")
        # layer 1 reads [x; VTEs] (2d), layer 2 reads the hidden width d
        fan_in = 2 * dim if layer.endswith("1") else dim
        bound = 1.0 / np.sqrt(fan_in)
        matrices[name] = rng.uniform(-bound, bound, size=shape_of(dim)).astype(np.float32)
    logger.log_seed("init_params", seed, dim=dim)
    return params_from_matrices(matrices, dim, blend)


def save_params(params: CvacptParams, directory: PathLike) -> None:
    """Write manifest.json and one EMB1 file per matrix"""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    matrices = params.matrices()
    manifest = {
        "format": PARAMS_FORMAT,
        "dim": params.dim,
        "blend": params.blend,
        "matrices": {name: list(matrix.shape) for name, matrix in matrices.items()},
    }
    for name, matrix in matrices.items():
        (root / f"{name}.emb").write_bytes(encode_matrix(np.asarray(matrix, dtype=np.float32)))
    (root / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("Transform parameters saved", path=str(root), dim=params.dim)


def load_params(directory: PathLike) -> CvacptParams:
    """
    Load parameters written by save_params

    Raises:
        ShapeMismatchError: A stored matrix disagrees with the manifest or with d
    """
    root = Path(directory)
    manifest = json.loads((root / MANIFEST_NAME).read_text(encoding="utf-8"))
    dim = int(manifest["dim"])
    blend = float(manifest["blend"])
    declared = manifest.get("matrices", {})

    matrices = {}
    for name, shape_of in PARAM_SHAPES.items():
        expected = shape_of(dim)
        if tuple(declared.get(name, expected)) != expected:
            raise ShapeMismatchError(name, expected, declared[name])
        data = load_embeddings(root / f"{name}.emb").data
        if data.shape != expected:
            raise ShapeMismatchError(name, expected, data.shape)
        matrices[name] = data

    logger.debug("Transform parameters loaded", path=str(root), dim=dim)
    return params_from_matrices(matrices, dim, blend)
