"""
Binary checkpoint format.

Layout, little-endian:
    b"NAHC" | u32 version | u32 block count |
    per block: u32 name length, UTF-8 name, u32 rank, u64 dims |
    float32 values of every block in manifest order

The network config travels as an empty block whose name is `config:`
followed by the config JSON. Files without it get their architecture
from the block shapes and default BN constants.
"""

import struct
from pathlib import Path

import numpy as np
import structlog
from pydantic import ValidationError

from warehouse_aco.domain.exceptions import CheckpointCorruptedError, ModelError
from warehouse_aco.domain.models import HeuristicNetConfig
from warehouse_aco.model.params import ModelParams, infer_config

MAGIC = b"NAHC"
VERSION = 1
CONFIG_BLOCK = "config:"

Manifest = list[tuple[str, tuple[int, ...]]]

logger = structlog.get_logger(__name__)


def _block_header(name: str, shape: tuple[int, ...]) -> bytes:
    encoded = name.encode("utf-8")
    return (
        struct.pack("<I", len(encoded))
        + encoded
        + struct.pack(f"<I{len(shape)}Q", len(shape), *shape)
    )


def save_checkpoint(params: ModelParams, path: Path) -> None:
    """Write every parameter block, running statistics included."""
    header = [MAGIC, struct.pack("<II", VERSION, len(params.values) + 1)]
    header.extend(_block_header(name, values.shape) for name, values in params.values.items())
    header.append(_block_header(CONFIG_BLOCK + params.config.model_dump_json(), (0,)))

    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(b"".join(header))
        for values in params.values.values():
            fh.write(np.ascontiguousarray(values, dtype="<f4").tobytes())
    logger.info("checkpoint_saved", path=str(path), blocks=len(params.values))


class _Reader:
    def __init__(self, data: bytes, path: Path) -> None:
        self.data = data
        self.offset = 0
        self.path = path

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise CheckpointCorruptedError(str(self.path), "truncated header")
        chunk = self.data[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str) -> tuple[int, ...]:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_manifest(path: Path) -> tuple[HeuristicNetConfig, Manifest]:
    """
    Parse the header only.

    Returns:
        Network config and the parameter blocks (the config block excluded)

    Raises:
        CheckpointCorruptedError: On bad magic, version or header
    """
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CheckpointCorruptedError(str(path), str(e)) from e
    manifest, _ = _parse_header(data, path)
    return _split_config(manifest, path)


def _parse_header(data: bytes, path: Path) -> tuple[Manifest, int]:
    reader = _Reader(data, path)
    if reader.take(len(MAGIC)) != MAGIC:
        raise CheckpointCorruptedError(str(path), "bad magic")
    (version,) = reader.unpack("<I")
    if version != VERSION:
        raise CheckpointCorruptedError(str(path), f"unsupported version {version}")

    (count,) = reader.unpack("<I")
    manifest: Manifest = []
    for _ in range(count):
        (name_length,) = reader.unpack("<I")
        try:
            name = reader.take(name_length).decode("utf-8")
        except UnicodeDecodeError as e:
            raise CheckpointCorruptedError(str(path), "block name is not UTF-8") from e
        (rank,) = reader.unpack("<I")
        dims = reader.unpack(f"<{rank}Q")
        manifest.append((name, tuple(int(d) for d in dims)))
    return manifest, reader.offset


def _split_config(manifest: Manifest, path: Path) -> tuple[HeuristicNetConfig, Manifest]:
    blocks = [(name, shape) for name, shape in manifest if not name.startswith(CONFIG_BLOCK)]
    extras = [(name, shape) for name, shape in manifest if name.startswith(CONFIG_BLOCK)]
    if len(extras) > 1 or any(np.prod(shape, dtype=np.int64) for _, shape in extras):
        raise CheckpointCorruptedError(str(path), "config must be one empty block")
    documents = [name[len(CONFIG_BLOCK) :] for name, _ in extras]
    try:
        if documents:
            return HeuristicNetConfig.model_validate_json(documents[0]), blocks
        return infer_config(dict(blocks)), blocks
    except ValidationError as e:
        raise CheckpointCorruptedError(str(path), "invalid network config") from e
    except ModelError as e:
        raise CheckpointCorruptedError(str(path), str(e)) from e


def load_checkpoint(path: Path) -> ModelParams:
    """
    Read a checkpoint and rebuild validated parameters.

    Raises:
        CheckpointCorruptedError: On bad magic, version, size or shapes
    """
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CheckpointCorruptedError(str(path), str(e)) from e

    manifest, offset = _parse_header(data, path)
    expected = offset + 4 * sum(int(np.prod(shape, dtype=np.int64)) for _, shape in manifest)
    if len(data) != expected:
        raise CheckpointCorruptedError(
            str(path), f"size {len(data)} bytes, manifest implies {expected}"
        )

    config, blocks = _split_config(manifest, path)
    values: dict[str, np.ndarray] = {}
    for name, shape in blocks:
        count = int(np.prod(shape, dtype=np.int64))
        block = np.frombuffer(data, dtype="<f4", count=count, offset=offset)
        values[name] = block.astype(np.float64).reshape(shape)
        offset += 4 * count

    try:
        params = ModelParams(config, values)
    except ModelError as e:
        raise CheckpointCorruptedError(str(path), str(e)) from e
    logger.info("checkpoint_loaded", path=str(path), blocks=len(values))
    return params
