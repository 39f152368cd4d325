"""Physical defaults table, read from ``settings.DENSITYLAB_DEFAULTS_PATH``."""
import json
import logging
from functools import lru_cache

from django.conf import settings

from .exceptions import DefaultsError
from .protective import Apparatus

logger = logging.getLogger(__name__)

REQUIRED_KEYS = (
    "gap", "T_over_gap", "envelope", "steps_per_unit", "grid_points", "half_width",
    "width", "pointer_mass", "residual_bound", "larmor_omega", "ensemble_N",
    "ensemble_trials",
)


def load_defaults(path=None):
    """The table at ``path``, or at the configured path; each file is read once."""
    return _read_table(str(path or settings.DENSITYLAB_DEFAULTS_PATH))


@lru_cache(maxsize=None)
def _read_table(path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            table = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise DefaultsError(f"cannot read defaults table {path}: {exc}") from exc
    missing = [key for key in REQUIRED_KEYS if key not in table]
    if missing:
        raise DefaultsError(f"defaults table {path} lacks {', '.join(missing)}")
    logger.debug("loaded defaults table %s (schema %s)", path, table.get("schema_version"))
    return table


def apparatus_from(values):
    """Apparatus from a parameters map, falling back on the defaults table."""
    table = load_defaults()
    values = values or {}
    return Apparatus(
        grid_points=int(values.get("grid_points", table["grid_points"])),
        half_width=float(values.get("half_width", table["half_width"])),
        width=float(values.get("width", table["width"])),
        mass=float(values.get("mass", table["pointer_mass"])),
    )
