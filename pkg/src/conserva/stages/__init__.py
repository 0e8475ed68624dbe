"""Pipeline stages."""

from .base_stage import BaseStage
from .dataset_stage import DatasetStage
from .dynamics_stage import DynamicsStage
from .extraction_stage import ExtractionStage, parametric_params
from .invariant_stage import InvariantStage
from .verification_stage import VerificationStage

__all__ = [
    "BaseStage",
    "DatasetStage",
    "DynamicsStage",
    "ExtractionStage",
    "InvariantStage",
    "VerificationStage",
    "parametric_params",
]
