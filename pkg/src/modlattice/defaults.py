"""Default controller gains and timing, loaded from ``data/defaults.json``."""
from __future__ import annotations

import json
import math
from importlib import resources

from .control import ControllerGains

_DOC = json.loads(resources.files(__package__).joinpath("data/defaults.json").read_text())

PERIOD: float = _DOC["period_s"]
OMEGA: float = 2.0 * math.pi / PERIOD
GAINS = ControllerGains(**_DOC["gains"])
