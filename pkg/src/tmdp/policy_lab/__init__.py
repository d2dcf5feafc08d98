"""Counterfactual policy construction and paired what-if comparison."""

from tmdp.policy_lab.alterations import (
    AlterationRule,
    AlterationApplication,
    PolicyAlteration,
    apply_alteration,
    slices_for_remaining_above,
)
from tmdp.policy_lab.compare import ComparisonReport, compare_policies

__all__ = [
    "AlterationApplication",
    "AlterationRule",
    "ComparisonReport",
    "PolicyAlteration",
    "apply_alteration",
    "compare_policies",
    "slices_for_remaining_above",
]
