import os
import sys
import logging
from logging.handlers import RotatingFileHandler

VERSION = "1.0.0"
TOOL_NAME = "backbone-toolkit"

# κ grid limits and Monte Carlo defaults shared by the CLI and the suites
KAPPA_MIN = 4.0
KAPPA_MAX = 8.0
DEFAULT_RADII = [8, 16, 32, 64, 128, 256]
DEFAULT_SAMPLES = 200000
EVENTS = ["one", "bb", "bww"]
SUITES = ["integrals", "constants", "identities", "numtheory"]

LOG_FILE = os.environ.get("BACKBONE_LOG_FILE", "logs/backbone.log")
LOG_LEVEL = os.environ.get("BACKBONE_LOG_LEVEL", "INFO").upper()

os.makedirs(os.path.dirname(LOG_FILE) or ".", exist_ok=True)
logging.basicConfig(
    level=getattr(logging, LOG_LEVEL, logging.INFO),
    format="%(asctime)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s",
    datefmt="%d-%b-%y %H:%M:%S",
    handlers=[
        RotatingFileHandler(LOG_FILE, maxBytes=50000000, backupCount=10),
        # stdout carries the JSON/CSV results
        logging.StreamHandler(sys.stderr),
    ],
)
logging.getLogger("joblib").setLevel(logging.WARNING)

LOGGER = logging.getLogger(__name__)
