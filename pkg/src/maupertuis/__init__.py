"""
Averaging of q'' = -(1/eps) grad V(q/eps) through travel-time integrals,
the effective Hamiltonian, and Jacobi-metric geodesics.
"""

__version__ = "0.1.0"

from .potential import PeriodicPotential, load as load_potential
from .quadrature import sigma, p_of_alpha, t_eps, tau_eps, sigma_lower_bound
from .dynamics import integrate_verlet, solve_1d_closed_form, Trajectory
from .homogenize import ivp_convergence_experiment, nonuniqueness_sequence, bvp_fixed_energy, bvp_fixed_time
from .effective import EffectiveHamiltonian1D, p_critical
from .geodesics import (Curve, TimedCurve, jacobi_energy, jacobi_length, action, minimize_jacobi,
                        reparametrize_to_time, verify_correspondence, cell_problem_jacobi,
                        cell_problem_action)

__all__ = [
    "PeriodicPotential", "load_potential", "sigma", "p_of_alpha", "t_eps", "tau_eps",
    "sigma_lower_bound", "integrate_verlet", "solve_1d_closed_form", "Trajectory",
    "ivp_convergence_experiment", "nonuniqueness_sequence", "bvp_fixed_energy", "bvp_fixed_time",
    "EffectiveHamiltonian1D", "p_critical", "Curve", "TimedCurve", "jacobi_energy", "jacobi_length",
    "action", "minimize_jacobi", "reparametrize_to_time", "verify_correspondence",
    "cell_problem_jacobi", "cell_problem_action",
]
