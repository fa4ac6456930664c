"""Dice, model evaluation and the paired signed-rank test."""

from .dice import DiceVector, dice, dice_vector, foreground_dice
from .stats import PairedTestResult, exact_p_value, normal_p_value, wilcoxon_signed_rank
from .evaluate import COLUMNS, Evaluation, evaluate_model, evaluate_predictions, summarize

__all__ = [
    "DiceVector",
    "dice",
    "dice_vector",
    "foreground_dice",
    "PairedTestResult",
    "exact_p_value",
    "normal_p_value",
    "wilcoxon_signed_rank",
    "COLUMNS",
    "Evaluation",
    "evaluate_model",
    "evaluate_predictions",
    "summarize",
]
