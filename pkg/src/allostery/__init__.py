"""Finite-level profinite actions of surface groups.

Construction and exact verification of finite-index subgroups with
prescribed fixed-point statistics, chains of intersections with p-adic rate
schedules, exact rational fixed-set and cylinder measures, and the induction
of everything to non-orientable groups through the orientation double cover.
"""

from .words import (
    Generator,
    NonOrientablePresentation,
    SurfacePresentation,
    Word,
    boundary_closure_member,
    dehn_is_trivial,
    enumerate_deltas,
    enumerate_nontrivial,
    erase,
    erased_presentation,
    free_reduce,
    parse_word,
    phi,
    presentation_from_json,
    reduced_words,
)
from .actions import (
    PointedAction,
    canonical_relabel,
    canonical_serialize,
    fix_all,
    fix_set,
    load_action,
    product_intersection,
    quotient_map,
    save_action,
    trivial_action,
    verify_action,
)
from .covers import (
    HomologyData,
    SchreierData,
    SeparationMap,
    build_schreier,
    cocycle_cover,
    cyclic_cover,
    homology,
    iterated_cocycle_tower,
    schreier_class,
    search_separation,
)
from .construction import (
    BuildConfig,
    Chain,
    ChainLevel,
    SubgroupCertificate,
    build_chain,
    build_lambda,
    choose_rates,
    derive_seed,
    verify_certificate,
)
from .analysis import (
    TrivialityCertificate,
    compare_chains,
    cylinder_measure,
    fix_proportion,
    proportion_series,
    stabilizer_ball,
    urs_certificate,
)
from .induction import (
    EmbeddingData,
    induce,
    induced_gamma_a_measure,
    orientation_double_cover,
    verify_embedding,
)
from . import errors

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
