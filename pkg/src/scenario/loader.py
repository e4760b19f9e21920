import json
import logging
from pathlib import Path

from pydantic import ValidationError

from errors import ScenarioError
from scenario.base import Scenario
from scenario.equivalent import check_crown

_logger = logging.getLogger("Scenario")

PRESET_DIR = Path(__file__).parent / "presets"


def list_presets() -> list[str]:
    return sorted(path.stem for path in PRESET_DIR.glob("*.json"))


def parse_scenario(data: dict) -> Scenario:
    try:
        scenario = Scenario.model_validate(data)
    except ValidationError as e:
        raise ScenarioError(f"invalid scenario: {e}") from e
    check_crown(scenario)
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario file, or a bundled preset when path names one (e.g. "torus-fixture")."""
    path = Path(path)
    if not path.exists() and str(path) in list_presets():
        path = PRESET_DIR / f"{path}.json"
    if not path.exists():
        raise ScenarioError(f"scenario file {path} not found (presets: {', '.join(list_presets())})")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ScenarioError(f"scenario file {path} is not valid JSON: {e}") from e
    scenario = parse_scenario(data)
    _logger.info(
        f"Scenario {scenario.name}: T={scenario.horizon} s, {len(scenario.coils)} static coils, "
        f"{len(scenario.equivalent_loops())} equivalent loops"
    )
    return scenario


def save_scenario(scenario: Scenario, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(scenario.model_dump_json(indent=2), encoding="utf-8")
    return path
