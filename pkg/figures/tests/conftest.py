import json
import subprocess
import sys

import pytest

BUDGET_SINGLE = {
    "sites": 1,
    "onsite": 1.0,
    "hopping": 1.0,
    "leads": [
        {
            "modes": 8,
            "half_bandwidth": 4.0,
            "coupling": 1.0,
            "temperature": 1.0,
            "chemical_potential": 0.0,
            "attach_site": 1,
        }
    ],
    "initial_occupation": 0.5,
    "dt": 0.02,
    "t_max": 1.0,
}

BUDGET_MULTI = dict(
    BUDGET_SINGLE,
    leads=[
        dict(BUDGET_SINGLE["leads"][0], temperature=0.5),
        dict(BUDGET_SINGLE["leads"][0], temperature=1.0),
    ],
)

ENTROPY_RATES = {
    "temperature_grid": [0.5, 1.0],
    "modes_grid": [3, 5],
    "sites": 1,
    "onsite": 1.0,
    "hopping": 1.0,
    "half_bandwidth": 10.0,
    "coupling": 1.0,
    "chemical_potential": 0.0,
    "initial_occupation": 0.5,
    "dt": 0.01,
    "t_max": 0.3,
}

THERMALIZATION = {
    "sites_grid": [1, 2],
    "modes_grid": [4, 8, 16],
    "temperature_grid": [0.5, 1.0, 5.0],
    "onsite": 1.0,
    "hopping": 1.0,
    "half_bandwidth": 10.0,
    "coupling": 1.0,
    "chemical_potential": 0.0,
    "threads": 1,
}

_CONFIGS = {
    "budget-single": (BUDGET_SINGLE, "budget_single.csv"),
    "budget-multi": (BUDGET_MULTI, "budget_multi.csv"),
    "entropy-rates": (ENTROPY_RATES, "entropy_rates.csv"),
    "thermalization-sweep": (THERMALIZATION, "thermalization_sweep.csv"),
}


@pytest.fixture(scope="session")
def scenario_csvs(tmp_path_factory):
    """Real CSV output of all four scenarios, produced through the
    simulator's command-line interface."""
    root = tmp_path_factory.mktemp("scenario-output")
    paths = {}
    for scenario, (config, csv_name) in _CONFIGS.items():
        cfg = root / f"{scenario}.json"
        cfg.write_text(json.dumps(config))
        out = root / scenario
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "mesoleads.cli",
                scenario,
                "--config",
                str(cfg),
                "--out",
                str(out),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        paths[scenario] = out / csv_name
    return paths
