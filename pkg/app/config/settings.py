"""
Environment defaults and logging setup.

Values are read from the process environment after loading an optional
`.env` file. Config files and CLI flags override them.
"""
import logging
import os

from dotenv import load_dotenv
from rich.logging import RichHandler

load_dotenv()

VERSION = "1.0.0"
LOG_LEVEL = os.getenv("FOODPRICE_LOG_LEVEL", "INFO").upper()
DEFAULT_OUT_DIR = os.getenv("FOODPRICE_OUT_DIR", "out")


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError:
        logging.getLogger(__name__).warning("[settings] ignoring non-integer %s=%r", name, raw)
        return default


DEFAULT_SEED = _env_int("FOODPRICE_SEED", 42)


def env_defaults() -> dict:
    """Config keys whose defaults may come from the environment"""
    return {"out_dir": DEFAULT_OUT_DIR, "seed": DEFAULT_SEED}


def configure_logging(level: str = LOG_LEVEL) -> None:
    """Route every toolkit logger through one rich console handler"""
    root = logging.getLogger()
    for handler in list(root.handlers):
        if isinstance(handler, RichHandler):
            root.removeHandler(handler)
    handler = RichHandler(show_path=False, rich_tracebacks=False, markup=False)
    handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
    root.addHandler(handler)
    root.setLevel(getattr(logging, str(level).upper(), logging.INFO))
