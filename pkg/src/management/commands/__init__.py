"""
Command-line commands of the mced tool.
"""

from src.management.commands.analyze import analyze
from src.management.commands.cost_benefit import cost_benefit
from src.management.commands.simulate import simulate
from src.management.commands.strata import analyze_strata_command

__all__ = ["analyze", "analyze_strata_command", "cost_benefit", "simulate"]
