from online.base import OnlineModel, OnlineState, ResultTable, StepOutput, result_columns
from online.runner import init_state, resolve_stepper, run_scenario, step_em, step_force_and_struct
from online.stepper import ThetaStepper, em_rom_stepper, simulate_em_rom
from online.validation import ValidationReport, compare_results, run_fom_chain

__all__ = [
    "OnlineModel",
    "OnlineState",
    "ResultTable",
    "StepOutput",
    "result_columns",
    "init_state",
    "resolve_stepper",
    "run_scenario",
    "step_em",
    "step_force_and_struct",
    "ThetaStepper",
    "em_rom_stepper",
    "simulate_em_rom",
    "ValidationReport",
    "compare_results",
    "run_fom_chain",
]
