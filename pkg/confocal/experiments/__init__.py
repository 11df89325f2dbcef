"""Named experiments behind the command line"""

from confocal.experiments.runner import EXPERIMENTS, build_config, run, run_experiment

__all__ = ["EXPERIMENTS", "build_config", "run", "run_experiment"]
