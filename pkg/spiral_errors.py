#!/usr/bin/env python3
"""
Error hierarchy for spiralsheet
Each error knows the exit status the command-line tool reports for it
"""


class SpiralError(Exception):
    """Base class for every spiralsheet failure"""
    exit_code = 1


# Parameter validation (exit 1)

class NonPositivePitch(SpiralError):
    pass


class ZeroCirculation(SpiralError):
    pass


class UnsortedPhases(SpiralError):
    pass


class LengthMismatch(SpiralError):
    pass


class NonPositiveTime(SpiralError):
    pass


class BranchOutOfRange(SpiralError):
    pass


class InvalidGauge(SpiralError):
    pass


class InvalidArgument(SpiralError):
    pass


class ConfigError(SpiralError):
    pass


# Evaluation

class OnSheet(SpiralError):
    """Point lies on a branch (or at the spiral centre); use one-sided limits"""


class StencilCrossesSheet(SpiralError):
    pass


class CompatibilityViolated(SpiralError):
    pass


class ToleranceNotMet(SpiralError):
    pass


class QuadratureBudgetExceeded(SpiralError):
    pass


# Solvers (exit 2)

class SolverError(SpiralError):
    exit_code = 2


class DegenerateDirection(SolverError):
    pass


class NoConvergence(SolverError):
    pass


class SingularJacobian(SolverError):
    pass
