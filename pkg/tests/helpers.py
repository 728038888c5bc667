import copy
import json

from resilient_cdc.config import bundled_scenario, config_from_dict

UNIT = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]


def default_dict():
    return json.loads(bundled_scenario().read_text())


def small_dict(**overrides):
    d = {
        "robots": {"count": 3, "seed": 1, "min_separation": 0.05},
        "domain": copy.deepcopy(UNIT),
        "tasks": [{"kind": "consensus"}],
        "gains": {"kappa": 100.0},
        "horizon": 20,
    }
    d.update(overrides)
    return d


def small_config(**overrides):
    return config_from_dict(small_dict(**overrides))
