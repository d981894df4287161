"""
Arnés de Experimentos
=====================
Ensembles Monte-Carlo, verificación de cotas, estudios de convergencia,
límite singular, diagnósticos cinéticos y reportes.
"""

from .convergence import (
    TEST_FUNCTIONS,
    StrongConvergenceReport,
    WeakResidualReport,
    strong_convergence_study,
    weak_residual_study,
)
from .ensemble import (
    EnergyReport,
    StabilityResult,
    additive_noise_l2,
    bound_c0,
    bound_c0_bar,
    bound_c0_tilde,
    initial_energy,
    mean_se,
    resolve_workers,
    run_ensemble,
    run_members,
    stability_experiment,
    stability_sweep,
)
from .initial_data import InitialCondition, build_initial, perturbation
from .kinetic_study import TranslationReport, kinetic_identity_check, translation_study
from .limit_study import (
    LimitLevel,
    LimitStudyReport,
    kinetic_compactness,
    ladder,
    limit_study,
    validate_levels,
    velocity_gap,
)
from .reports import build_report, load_report, sanitize, write_csv, write_report

__all__ = [
    "InitialCondition", "build_initial", "perturbation",
    "EnergyReport", "run_ensemble", "run_members", "mean_se", "resolve_workers",
    "initial_energy", "bound_c0", "bound_c0_tilde", "bound_c0_bar", "additive_noise_l2",
    "StabilityResult", "stability_experiment", "stability_sweep",
    "StrongConvergenceReport", "strong_convergence_study",
    "WeakResidualReport", "weak_residual_study", "TEST_FUNCTIONS",
    "LimitLevel", "LimitStudyReport", "ladder", "validate_levels", "limit_study",
    "kinetic_compactness", "velocity_gap",
    "TranslationReport", "translation_study", "kinetic_identity_check",
    "build_report", "write_report", "write_csv", "load_report", "sanitize",
]
