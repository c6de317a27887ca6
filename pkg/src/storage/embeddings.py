"""
EMB1 embedding container reader and writer

Layout: magic "EMB1", then little-endian u32 row count, u32 dimension and
u32 dtype code (0 = IEEE-754 binary32), then the row-major little-endian payload.
"""

import struct
from pathlib import Path
from typing import Union

import numpy as np

from ..config.logger import get_logger
from .models import (
    DTYPE_FLOAT32, EMB_HEADER_FORMAT, EMB_HEADER_SIZE, EMB_MAGIC,
    BadMagicError, EmbeddingStore, NonFiniteValueError, StorageError, TruncatedFileError,
    UnsupportedDtypeError
)

logger = get_logger()

PathLike = Union[str, Path]


def first_non_finite(matrix: np.ndarray):
    """(row, col) of the first non-finite entry in row-major order, or None"""
    bad = np.argwhere(~np.isfinite(matrix))
    if bad.size == 0:
        return None
    return int(bad[0][0]), int(bad[0][1])


def encode_matrix(matrix: np.ndarray) -> bytes:
    """Serialize a 2-D float32 matrix into EMB1 bytes"""
    rows, dim = matrix.shape
    header = struct.pack(EMB_HEADER_FORMAT, EMB_MAGIC, rows, dim, DTYPE_FLOAT32)
    return header + np.ascontiguousarray(matrix, dtype="<f4").tobytes()


def decode_matrix(payload: bytes, path: str = "") -> np.ndarray:
    """Parse EMB1 bytes into a float32 matrix, rejecting corrupt content"""
    if len(payload) < EMB_HEADER_SIZE:
        if payload[:len(EMB_MAGIC)] != EMB_MAGIC[:len(payload)]:
            raise BadMagicError(path, payload[:len(EMB_MAGIC)])
        raise TruncatedFileError(path, EMB_HEADER_SIZE, len(payload))

    magic, rows, dim, dtype_code = struct.unpack(EMB_HEADER_FORMAT, payload[:EMB_HEADER_SIZE])
    if magic != EMB_MAGIC:
        raise BadMagicError(path, magic)
    if dtype_code != DTYPE_FLOAT32:
        raise UnsupportedDtypeError(path, dtype_code)

    expected = EMB_HEADER_SIZE + rows * dim * 4
    if len(payload) != expected:
        raise TruncatedFileError(path, expected, len(payload))

    matrix = np.frombuffer(payload, dtype="<f4", offset=EMB_HEADER_SIZE).reshape(rows, dim)
    position = first_non_finite(matrix)
    if position is not None:
        raise NonFiniteValueError(position[0], position[1], path)
    return matrix.astype(np.float32)


def load_embeddings(path: PathLike) -> EmbeddingStore:
    """
    Load an EMB1 file

    Args:
        path: File to read

    Returns:
        EmbeddingStore bit-identical to what was saved
    """
    payload = Path(path).read_bytes()
    matrix = decode_matrix(payload, str(path))
    if matrix.shape[1] == 0:
        raise StorageError(f"{path}: dimension must be positive", "BAD_DIMENSION", 2, {"path": str(path)})
    logger.debug("Embeddings loaded", path=str(path), rows=matrix.shape[0], dim=matrix.shape[1])
    return EmbeddingStore(data=matrix, source_path=str(path))


def save_embeddings(store: EmbeddingStore, path: PathLike) -> None:
    """Write a store as an EMB1 file"""
    Path(path).write_bytes(encode_matrix(store.data))
    logger.debug("Embeddings saved", path=str(path), rows=store.rows, dim=store.dim)


def store_from_array(matrix, source_path: str = "") -> EmbeddingStore:
    """Build a store from any finite 2-D array, casting to float32"""
    data = np.asarray(matrix, dtype=np.float32)
    if data.ndim != 2:
        raise ValueError("embedding matrix must be 2-D")
    position = first_non_finite(data)
    if position is not None:
        raise NonFiniteValueError(position[0], position[1], source_path)
    return EmbeddingStore(data=np.ascontiguousarray(data), source_path=source_path)
