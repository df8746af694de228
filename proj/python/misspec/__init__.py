from ._core import (
    Experiment,
    berk_nash_residual,
    check_weak_identification,
    classify_model,
    closest_model,
    equilibrium_models,
    equilibrium_residual,
    find_equilibria,
    integrate_di,
    kl_divergence,
    load_experiment,
    minimize_kld,
    preset,
    preset_config,
    preset_names,
    run_learning,
    solve_bellman,
    test_attracting,
    test_repelling,
    triangle_cycle,
    validate,
)

__all__ = [
    "Experiment",
    "berk_nash_residual",
    "check_weak_identification",
    "classify_model",
    "closest_model",
    "equilibrium_models",
    "equilibrium_residual",
    "find_equilibria",
    "integrate_di",
    "kl_divergence",
    "load_experiment",
    "minimize_kld",
    "preset",
    "preset_config",
    "preset_names",
    "run_learning",
    "solve_bellman",
    "test_attracting",
    "test_repelling",
    "triangle_cycle",
    "validate",
]
