from agency_count.evalkit.ablate import AblationResult, ablate
from agency_count.evalkit.curves import emit_curves, load_curves_csv
from agency_count.evalkit.evaluate import EvalResult, evaluate
from agency_count.evalkit.sweep import SWEEP_PRESETS, SweepResult, sweep
from agency_count.evalkit.toy import ToyConfig, ToyResult, ToyScheme, run_toy

__all__ = [
    "AblationResult",
    "EvalResult",
    "SWEEP_PRESETS",
    "SweepResult",
    "ToyConfig",
    "ToyResult",
    "ToyScheme",
    "ablate",
    "emit_curves",
    "evaluate",
    "load_curves_csv",
    "run_toy",
    "sweep",
]
