"""Python access to the frontlab core."""
import json as _json

from ._frontlab import (  # noqa: F401
    ConfigError,
    ConstructionError,
    IgnitionProfile,
    IntegrationError,
    Medium,
    NumericError,
    __version__,
    compute_c0,
    config_hash,
    estimate_front_speed,
    mollified_datum_1d,
    read_field,
    sample_site,
    sha256,
    theta_convex_polygon,
)
from . import _frontlab


def medium(spec=None, seed=0):
    """Medium from a dict shaped like the config's medium block."""
    return Medium(_json.dumps(spec or {}), seed)


def front_speed(spec, seeds, e, probes, h=0.25, workers=0):
    return estimate_front_speed(_json.dumps(spec or {}), list(seeds), list(e), list(probes), h, workers)


def run_experiment(config, out_dir="", workers=0, seed_offset=0):
    """Run a config (dict or JSON text); returns the manifest as a dict."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _json.loads(_frontlab.run_experiment(text, out_dir, workers, seed_offset))
