"""Torsion growth experiments for Bianchi groups with symmetric-power coefficients."""
from .quad_arith import congruence_index, ideal, ideals_up_to, parse_element, parse_ideal, ring_of_integers
from .bianchi import builtin_presentation, coset_table, cusps, parse_subgroup, reidemeister_schreier
from .integer_homology import check_span_certificate, coinvariants, group_homology, h0_bound, snf
from .sym_modules import dual_action, rho_action, self_duality
from .cusp_geometry import TorusBundle, boundary_torsion, cheeger_consistency, torus_volumes
from .growth_lab import humbert_volume, predicted_bounds, run_sweep, weight_sweep

__version__ = "0.1.0"
