"""JSON instance documents."""

from pathlib import Path

import structlog
from pydantic import ValidationError

from warehouse_aco.domain.exceptions import InstanceError, InstanceFileError
from warehouse_aco.domain.models import WarehouseInstance

logger = structlog.get_logger(__name__)


def save_instance(instance: WarehouseInstance, path: Path) -> None:
    """Write an instance as a single JSON document (floats round-trip exactly)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(instance.model_dump_json(indent=2), encoding="utf-8")
    logger.info("instance_saved", path=str(path), nodes=instance.n_nodes, edges=instance.n_edges)


def load_instance(path: Path) -> WarehouseInstance:
    """
    Read and validate an instance document.

    Raises:
        InstanceFileError: If the file is unreadable or violates an invariant
    """
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InstanceFileError(str(path), str(e)) from e
    try:
        instance = WarehouseInstance.model_validate_json(text)
    except ValidationError as e:
        raise InstanceFileError(str(path), f"{e.error_count()} validation errors") from e
    except InstanceError as e:
        raise InstanceFileError(str(path), str(e)) from e
    logger.debug("instance_loaded", path=str(path), nodes=instance.n_nodes)
    return instance
